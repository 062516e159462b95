"""Eigenvalue solvers for the complex-symmetric generalized pencil (K, M).

Two routes: a dense solve of M^-1 K at desk scale, and shift-invert
Arnoldi on (K - sigma*M)^-1 M for windows near a target.  Complex
symmetry is never assumed by the solvers (it is checked by tests), and
every reported eigenpair is verified against the pencil by a direct
residual, so ARPACK/LAPACK internals stay behind the residual contract.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .assembly import shifted_lu

DENSE_CAP = 6000


class EigenAccuracyError(RuntimeError):
    """An eigen computation failed its residual contract."""


@dataclass
class EigenResult:
    """Pencil eigenvalues with per-pair residuals.

    residuals[i] = ||K v - mu M v|| / ((||K|| + |mu| ||M||) ||v||).
    converged is False when an iterative solve returned a partial result;
    the eigenvalues that did converge are still reported.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True
    tol: float = 1e-8

    def __len__(self):
        return len(self.eigenvalues)


def _inf_norm(a) -> float:
    return float(np.max(np.abs(a).sum(axis=1))) if a.shape[0] else 0.0


def _residuals(K, M, mu, V):
    nk = _inf_norm(K)
    nm = _inf_norm(M)
    R = K @ V - (M @ V) * mu[None, :]
    vnorm = np.linalg.norm(V, axis=0)
    return np.linalg.norm(R, axis=0) / ((nk + np.abs(mu) * nm) * vnorm)


def _as_sparse(a):
    return a if sparse.issparse(a) else sparse.csr_matrix(a)


def eig_all(K, M, tol: float = 1e-8, dense_cap: int = DENSE_CAP,
            with_vectors: bool = False) -> EigenResult:
    """All pencil eigenvalues by dense reduction to standard form.

    The generalized problem K v = mu M v is reduced via an LU
    factorization of the (well-conditioned, mass-like) matrix M to the
    standard eigenproblem for M^-1 K.
    """
    K = _as_sparse(K)
    M = _as_sparse(M)
    n = K.shape[0]
    if n > dense_cap:
        raise ValueError(
            f"pencil dimension {n} exceeds the dense cap {dense_cap}; "
            "use eig_near with a shift instead"
        )
    Md = M.toarray()
    lu, piv = scipy.linalg.lu_factor(Md)
    diag = np.abs(np.diag(lu))
    if diag.min() < 1e-14 * diag.max():
        raise np.linalg.LinAlgError(
            f"mass matrix numerically singular (pivot ratio {diag.min() / diag.max():.3e})"
        )
    A = scipy.linalg.lu_solve((lu, piv), K.toarray())
    vals, vecs = scipy.linalg.eig(A)
    res = _residuals(K, M, vals, vecs)
    if res.max() > tol:
        raise EigenAccuracyError(
            f"dense eigensolve violated the residual contract: max residual "
            f"{res.max():.3e} > tol {tol:.1e}"
        )
    order = np.lexsort((vals.imag, vals.real))
    return EigenResult(eigenvalues=vals[order], residuals=res[order],
                       eigenvectors=vecs[:, order] if with_vectors else None,
                       tol=tol)


def eig_near(K, M, shift: complex, k: int, tol: float = 1e-8,
             maxiter: int | None = None, v0: np.ndarray | None = None,
             with_vectors: bool = False) -> EigenResult:
    """k pencil eigenvalues nearest `shift` by shift-invert Arnoldi.

    Arnoldi (with ARPACK's full reorthogonalization) runs on the standard
    operator T = (K - shift*M)^-1 M, whose eigenvalues theta map back via
    mu = shift + 1/theta; no inner product involving the non-Hermitian M
    is ever needed.  Results are ordered by distance to the shift, ties
    broken by (Re, Im).
    """
    K = _as_sparse(K)
    M = _as_sparse(M)
    n = K.shape[0]
    if not 1 <= k <= n - 2:
        raise ValueError(f"k={k} out of range [1, {n - 2}] for dimension {n}")
    lu = shifted_lu(K, M, shift)
    op = spla.LinearOperator((n, n), matvec=lambda x: lu.solve(M @ x),
                             dtype=complex)
    if v0 is None:
        # fixed start vector keeps reruns bit-identical
        v0 = np.linspace(1.0, 2.0, n) + 0.5j
    converged = True
    try:
        theta, vecs = spla.eigs(op, k=k, which="LM", v0=v0, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        theta, vecs = exc.eigenvalues, exc.eigenvectors
        converged = False
        warnings.warn(
            f"shift-invert Arnoldi converged only {len(theta)} of {k} "
            f"eigenvalues near shift={shift}", RuntimeWarning, stacklevel=2)
        if len(theta) == 0:
            return EigenResult(eigenvalues=np.empty(0, complex),
                               residuals=np.empty(0), converged=False, tol=tol)
    mu = shift + 1.0 / theta
    res = _residuals(K, M, mu, vecs)
    good = res <= tol
    if not np.all(good):
        converged = False
        warnings.warn(
            f"{np.count_nonzero(~good)} eigenpair(s) near shift={shift} "
            f"exceeded the residual tolerance and were dropped",
            RuntimeWarning, stacklevel=2)
        mu, res, vecs = mu[good], res[good], vecs[:, good]
    order = np.lexsort((mu.imag, mu.real, np.abs(mu - shift)))
    return EigenResult(eigenvalues=mu[order], residuals=res[order],
                       eigenvectors=vecs[:, order] if with_vectors else None,
                       converged=converged, tol=tol)
