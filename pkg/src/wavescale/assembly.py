"""Finite-element assembly of the complex-scaled waveguide operator.

Everything is discretized on the semicylinder (0, X_max) x (0, 1) in the
pulled-back coordinates (x, y), where the scaled operator is the
divergence-form operator with matrix coefficient g_lambda^-1 and weight
sqrt(det g_lambda).  Bilinear Q1 elements on a uniform rectangle grid
with 2x2 Gauss quadrature per cell give the generalized pencil

    K[u, w] = int (g_lambda^-1 grad u) . grad w  sqrt(det g_lambda) dx dy
    M[u, w] = int u w sqrt(det g_lambda) dx dy

with *no* complex conjugation, so K and M are complex symmetric by
construction; local element matrices are explicitly symmetrized and the
scatter order is fixed, which makes K == K^T hold exactly (bitwise), not
just to rounding.  Homogeneous Dirichlet conditions are eliminated on
all four sides; the truncation boundary x = X_max relies on the decay of
outgoing solutions along the deformed contour.

The principal-part variant drops the weight (coefficient g_lambda^-1,
weight 1); its Rayleigh quotients witness the sector bound on the
numerical range.  The fiber operator is the transverse second-difference
Dirichlet matrix shifted by (1+lambda)^-2 tau^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .geometry import CrossSection, EndMap
from .scaling import ScalingProfile, check_scaling_parameter, deformed_metric

_GAUSS = 1.0 / np.sqrt(3.0)
# reference quadrature points (xi, eta) and Q1 shape data, fixed ordering
_QPTS = np.array([(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS),
                  (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)])


class ShiftAtSpectrumError(RuntimeError):
    """Requested shift/spectral parameter is numerically at the spectrum."""


def _shape_values():
    """Q1 shape functions and reference gradients at the quadrature points.

    Returns (N, dN) with N[q, i] and dN[q, i, c], c in (xi, eta).
    """
    xi = _QPTS[:, 0][:, None]
    eta = _QPTS[:, 1][:, None]
    signs_xi = np.array([-1.0, 1.0, 1.0, -1.0])
    signs_eta = np.array([-1.0, -1.0, 1.0, 1.0])
    n = (1.0 + signs_xi * xi) * (1.0 + signs_eta * eta) / 4.0
    dn = np.empty((4, 4, 2))
    dn[:, :, 0] = signs_xi * (1.0 + signs_eta * eta) / 4.0
    dn[:, :, 1] = signs_eta * (1.0 + signs_xi * xi) / 4.0
    return n, dn


_SHAPE_N, _SHAPE_DN = _shape_values()


@dataclass(frozen=True)
class Grid:
    """Uniform rectangle grid on (0, X_max) x (0, 1)."""

    X_max: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.X_max <= 0:
            raise ValueError(f"X_max must be positive, got {self.X_max}")
        if self.Nx < 2 or self.Ny < 2:
            raise ValueError(f"need at least 2 cells per direction, got {self.Nx}x{self.Ny}")

    @property
    def hx(self) -> float:
        return self.X_max / self.Nx

    @property
    def hy(self) -> float:
        return 1.0 / self.Ny

    @property
    def ndof(self) -> int:
        return (self.Nx - 1) * (self.Ny - 1)

    def interior_coords(self):
        """Interior node coordinates in dof order (x-major, y fastest)."""
        xs = np.linspace(0.0, self.X_max, self.Nx + 1)[1:-1]
        ys = np.linspace(0.0, 1.0, self.Ny + 1)[1:-1]
        return np.repeat(xs, self.Ny - 1), np.tile(ys, self.Nx - 1)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.X_max, self.Nx * factor, self.Ny * factor)


@dataclass
class ScaledOperator:
    """Complex-symmetric generalized pencil (K, M) with run metadata."""

    K: sparse.csr_matrix
    M: sparse.csr_matrix
    grid: Grid
    lam: complex
    kind: str  # "deformed" (weighted) or "principal" (weight 1)
    preset: str = ""
    profile: ScalingProfile | None = field(default=None, repr=False)

    def dump_matrix_market(self, directory, stem: str):
        """Write K and M in Matrix Market coordinate format (complex general)."""
        import pathlib

        directory = pathlib.Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, mat in (("K", self.K), ("M", self.M)):
            path = directory / f"{stem}_{name}.mtx"
            scipy.io.mmwrite(path, mat.tocoo())
            paths.append(path)
        return paths


@dataclass
class FiberOperator:
    """Transverse Dirichlet operator plus (1+lambda)^-2 tau^2 shift."""

    matrix: np.ndarray
    lam: complex
    tau: float
    Ny: int

    def eigenvalues(self) -> np.ndarray:
        vals = scipy.linalg.eigvals(self.matrix)
        return vals[np.lexsort((vals.imag, vals.real))]


def _quad_points(grid: Grid):
    """Axial/transverse coordinates of all quadrature points, (ncells, 4)."""
    cx, cy = np.meshgrid(np.arange(grid.Nx), np.arange(grid.Ny), indexing="ij")
    cx = cx.ravel()
    cy = cy.ravel()
    xq = (cx[:, None] + (_QPTS[None, :, 0] + 1.0) / 2.0) * grid.hx
    yq = (cy[:, None] + (_QPTS[None, :, 1] + 1.0) / 2.0) * grid.hy
    return cx, cy, xq, yq


def _dof_map(grid: Grid, cx, cy):
    """Interior dof indices of each cell's 4 nodes; -1 marks boundary nodes."""
    nyi = grid.Ny - 1
    corner_i = np.stack([cx, cx + 1, cx + 1, cx], axis=1)
    corner_j = np.stack([cy, cy, cy + 1, cy + 1], axis=1)
    interior = (corner_i >= 1) & (corner_i <= grid.Nx - 1) & \
               (corner_j >= 1) & (corner_j <= grid.Ny - 1)
    dof = (corner_i - 1) * nyi + (corner_j - 1)
    return np.where(interior, dof, -1)


def _assemble(grid: Grid, em: EndMap, profile: ScalingProfile, lam: complex,
              weighted: bool) -> ScaledOperator:
    lam = check_scaling_parameter(lam, em.alpha)
    if grid.X_max <= profile.R_tilde + 2.0:
        raise ValueError(
            f"grid too short: X_max={grid.X_max} must exceed R_tilde + 2 = "
            f"{profile.R_tilde + 2.0} so the scaled region is interior"
        )

    cx, cy, xq, yq = _quad_points(grid)
    dm = deformed_metric(em, profile, lam, xq, yq)

    if weighted:
        coeff = dm.sqrt_det[..., None, None] * dm.ginv
        mass_w = dm.sqrt_det
    else:
        coeff = dm.ginv
        mass_w = np.ones_like(dm.sqrt_det)

    # physical gradients: scale reference derivatives by 2/hx, 2/hy
    grad = _SHAPE_DN * np.array([2.0 / grid.hx, 2.0 / grid.hy])
    jac = grid.hx * grid.hy / 4.0  # cell Jacobian; Gauss weights are 1

    kloc = jac * np.einsum("qic,nqcd,qjd->nij", grad, coeff, grad)
    mloc = jac * np.einsum("qi,qj,nq->nij", _SHAPE_N, _SHAPE_N, mass_w)
    # the bilinear forms are symmetric; make the element matrices exactly so
    kloc = 0.5 * (kloc + kloc.transpose(0, 2, 1))
    mloc = 0.5 * (mloc + mloc.transpose(0, 2, 1))

    dof = _dof_map(grid, cx, cy)
    rows = np.repeat(dof[:, :, None], 4, axis=2)
    cols = np.repeat(dof[:, None, :], 4, axis=1)
    keep = (rows >= 0) & (cols >= 0)

    n = grid.ndof
    K = sparse.coo_matrix((kloc[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    M = sparse.coo_matrix((mloc[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    # duplicate summation order is not guaranteed mirror-symmetric; average
    # with the transpose so K == K^T holds bitwise (values change <= 1 ulp)
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    return ScaledOperator(K=K, M=M, grid=grid, lam=lam,
                          kind="deformed" if weighted else "principal",
                          preset=em.preset, profile=profile)


def assemble_deformed(grid: Grid, em: EndMap, profile: ScalingProfile,
                      lam: complex) -> ScaledOperator:
    """Weighted pencil discretizing the scaled Laplace-Beltrami operator."""
    return _assemble(grid, em, profile, lam, weighted=True)


def assemble_principal(grid: Grid, em: EndMap, profile: ScalingProfile,
                       lam: complex) -> ScaledOperator:
    """Principal-part pencil: coefficient g_lambda^-1, weight one."""
    return _assemble(grid, em, profile, lam, weighted=False)


def assemble_fiber(cs: CrossSection, Ny: int, lam: complex, tau: float,
                   alpha: float = np.pi / 4) -> FiberOperator:
    """Second-difference transverse operator plus (1+lambda)^-2 tau^2."""
    lam = check_scaling_parameter(lam, alpha)
    if Ny < 2:
        raise ValueError(f"Ny must be at least 2, got {Ny}")
    hy = 1.0 / Ny
    n = Ny - 1
    mat = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
           - np.diag(np.ones(n - 1), -1)) / hy**2
    mat = mat.astype(complex)
    mat += (1.0 + lam) ** (-2.0) * tau**2 * np.eye(n)
    return FiberOperator(matrix=mat, lam=lam, tau=float(tau), Ny=Ny)


def pairing_lambda(op: ScaledOperator, F: np.ndarray, G: np.ndarray) -> complex:
    """Sesquilinear pairing int F conj(G) sqrt(det g_lambda) dx dy.

    Only the second argument is conjugated; with the weighted mass matrix
    this is conj(G)^T M F.
    """
    F = np.asarray(F)
    G = np.asarray(G)
    if F.shape != (op.grid.ndof,) or G.shape != (op.grid.ndof,):
        raise ValueError(
            f"coefficient vectors must have shape ({op.grid.ndof},), "
            f"got {F.shape} and {G.shape}"
        )
    return complex(np.vdot(G, op.M @ F))


def shifted_lu(K, M, mu: complex):
    """Sparse LU of K - mu*M with a near-singularity pivot check."""
    A = (K - mu * M).tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise ShiftAtSpectrumError(
                f"factorization of K - mu*M failed at mu={mu}: {exc}"
            ) from exc
    piv = np.abs(lu.U.diagonal())
    if piv.min() < 1e-14 * piv.max():
        raise ShiftAtSpectrumError(
            f"mu={mu} is numerically at the spectrum of the pencil "
            f"(pivot ratio {piv.min() / piv.max():.3e})"
        )
    return lu


def shifted_factorization(op: ScaledOperator, mu: complex):
    """Sparse LU of op.K - mu*op.M (see shifted_lu)."""
    return shifted_lu(op.K, op.M, mu)


def solve_shifted(op: ScaledOperator, mu: complex, b: np.ndarray,
                  return_residual: bool = False):
    """Resolvent application u = (K - mu*M)^-1 M b with residual contract."""
    b = np.asarray(b, dtype=complex)
    if b.shape != (op.grid.ndof,):
        raise ValueError(f"right-hand side must have shape ({op.grid.ndof},), got {b.shape}")
    lu = shifted_factorization(op, mu)
    rhs = op.M @ b
    u = lu.solve(rhs)
    scale = np.linalg.norm(rhs)
    residual = float(np.linalg.norm((op.K - mu * op.M) @ u - rhs) / scale) \
        if scale > 0 else 0.0
    if residual > 1e-10:
        raise ShiftAtSpectrumError(
            f"shifted solve at mu={mu} lost accuracy: relative residual "
            f"{residual:.3e} exceeds 1e-10 (mu too close to the spectrum?)"
        )
    return (u, residual) if return_residual else u
