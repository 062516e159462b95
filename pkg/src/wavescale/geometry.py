"""Cross-section eigendata and analytic end-maps.

The waveguide lives on the semicylinder (0, inf) x (0, 1).  Its physical
shape is encoded by an end-map kappa(x, y) = (zeta, eta): an analytic
diffeomorphism whose Jacobian tends to the identity as the axial
coordinate goes to infinity inside a sector |arg z| < alpha of the
complex axial plane.  Everything downstream (deformed metrics, operator
assembly) only ever evaluates kappa's Jacobian at complex axial points
z = x + lambda*v(x), so each preset implements closed-form expressions
that continue analytically off the real axis.

Conventions:
  * Jacobian rows are the outputs (zeta, eta), columns the inputs (x, y).
  * The induced metric is g = kappa'^T kappa' with a plain transpose
    (no conjugation), so g is complex symmetric off the real axis.
  * Matrix size is measured in the max-entry norm max_lm |a_lm|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expi


class SectorError(ValueError):
    """Axial coordinate lies outside the end-map's analyticity sector."""


PHI_KINDS = ("one", "exp", "power", "log")


def _check_sector(z, alpha):
    z = np.asarray(z, dtype=complex)
    bad = ~(np.abs(np.angle(z)) < alpha)
    if np.any(bad):
        offender = z[bad].ravel()[0] if z.ndim else z
        raise SectorError(
            f"axial coordinate z={offender} outside the analyticity sector "
            f"|arg z| < alpha = {alpha:.6g}"
        )
    return z


def max_entry_norm(a):
    """Max-entry matrix norm max_lm |a_lm|, applied over the last two axes."""
    return np.max(np.abs(a), axis=(-2, -1))


@dataclass(frozen=True)
class CrossSection:
    """Unit-interval cross-section with Dirichlet eigendata.

    The transverse eigenpairs are closed form: threshold(j) = (j*pi)^2
    with L2-normalized eigenfunction sqrt(2)*sin(j*pi*y).
    """

    j_max: int = 10

    def __post_init__(self):
        if self.j_max < 1:
            raise ValueError(f"j_max must be a positive integer, got {self.j_max}")

    def threshold(self, j: int) -> float:
        if not 1 <= j <= self.j_max:
            raise ValueError(f"mode index j={j} out of range [1, {self.j_max}]")
        return (j * np.pi) ** 2

    def thresholds(self, count: int | None = None) -> np.ndarray:
        count = self.j_max if count is None else count
        if not 1 <= count <= self.j_max:
            raise ValueError(f"threshold count {count} out of range [1, {self.j_max}]")
        return (np.arange(1, count + 1) * np.pi) ** 2

    def eigenfunction(self, j: int, y):
        if not 1 <= j <= self.j_max:
            raise ValueError(f"mode index j={j} out of range [1, {self.j_max}]")
        return np.sqrt(2.0) * np.sin(j * np.pi * np.asarray(y))


@dataclass(frozen=True)
class MetricSample:
    """Pointwise induced metric g = kappa'^T kappa' at (z, y)."""

    g: np.ndarray
    z: complex
    y: float


class EndMap:
    """Base class for analytic end-maps; subclasses fill in map and Jacobian."""

    #: sector half-angle of guaranteed analyticity, 0 < alpha < pi/4
    alpha: float
    preset: str

    def _map(self, z, y):  # pragma: no cover - abstract
        raise NotImplementedError

    def _jacobian(self, z, y):  # pragma: no cover - abstract
        raise NotImplementedError

    def map_point(self, z, y):
        """Evaluate kappa(z, y); z may be complex inside the sector."""
        z = _check_sector(z, self.alpha)
        return self._map(z, np.asarray(y, dtype=float))

    def jacobian(self, z, y):
        """Jacobian matrix of kappa at (z, y), shape (..., 2, 2)."""
        z = _check_sector(z, self.alpha)
        return self._jacobian(z, np.asarray(y, dtype=float))

    def metric(self, z, y):
        """Induced metric g = kappa'^T kappa' (plain transpose), (..., 2, 2)."""
        jac = self.jacobian(z, y)
        return np.einsum("...ki,...kj->...ij", jac, jac)

    def jacobian_det(self, z, y):
        """det kappa'; equals the analytic square root of det g that is
        positive on the real axis."""
        jac = self.jacobian(z, y)
        return jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]


class StraightEnd(EndMap):
    """Identity map: the flat half-cylinder itself."""

    preset = "straight"

    def __init__(self, alpha: float = np.pi / 4 - 0.01):
        self.alpha = alpha

    def _map(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        return np.asarray(z, dtype=complex), np.asarray(y, dtype=complex)

    def _jacobian(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        jac = np.zeros(z.shape + (2, 2), dtype=complex)
        jac[..., 0, 0] = 1.0
        jac[..., 1, 1] = 1.0
        return jac


class LogShearEnd(EndMap):
    """Shear of the half-strip along a logarithm: (x, y) -> (x, y + log(x+2)).

    The Jacobian deviation from the identity is 1/(z+2), which decays like
    1/Re z uniformly in the sector, so the end is asymptotically cylindrical
    with an arbitrarily slow (non-integrable-rate) approach.
    """

    preset = "log_shear"

    def __init__(self, alpha: float = np.pi / 6):
        self.alpha = alpha

    def _map(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        return np.asarray(z, dtype=complex), y + np.log(z + 2.0)

    def _jacobian(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        jac = np.zeros(z.shape + (2, 2), dtype=complex)
        jac[..., 0, 0] = 1.0
        jac[..., 1, 0] = 1.0 / (z + 2.0)
        jac[..., 1, 1] = 1.0
        return jac


def _li(w):
    # logarithmic integral, analytic for Re w > 0 off the branch cut
    return expi(np.log(np.asarray(w, dtype=complex)))


_LI_AT_2 = float(np.real(_li(2.0)))


class _Profile:
    """One axial profile factor: value, derivative, antiderivative from 0."""

    def __init__(self, kind: str, s: float = 1.0):
        if kind not in PHI_KINDS:
            raise ValueError(f"unknown profile kind {kind!r}, expected one of {PHI_KINDS}")
        if kind == "power" and s <= 0:
            raise ValueError(f"power profile needs s > 0, got s={s}")
        self.kind = kind
        self.s = float(s)

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "one":
            return np.ones_like(z)
        if self.kind == "exp":
            return 1.0 + np.exp(-z)
        if self.kind == "power":
            return 1.0 + (z + 1.0) ** (-self.s)
        return 1.0 + 1.0 / np.log(z + 2.0)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "one":
            return np.zeros_like(z)
        if self.kind == "exp":
            return -np.exp(-z)
        if self.kind == "power":
            return -self.s * (z + 1.0) ** (-self.s - 1.0)
        return -1.0 / ((z + 2.0) * np.log(z + 2.0) ** 2)

    def antiderivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "one":
            return z.copy()
        if self.kind == "exp":
            return z + 1.0 - np.exp(-z)
        if self.kind == "power":
            if self.s == 1.0:
                return z + np.log(z + 1.0)
            return z + ((z + 1.0) ** (1.0 - self.s) - 1.0) / (1.0 - self.s)
        return z + _li(z + 2.0) - _LI_AT_2


class ProfileProductEnd(EndMap):
    """Separable end: zeta = integral_0^x phi, eta = y * psi(x).

    phi stretches the axis, psi modulates the transverse width; both are
    drawn from a family of analytic profiles that tend to 1 at infinity
    (kinds: "one", "exp" for 1+e^-x, "power" for 1+(x+1)^-s, "log" for
    1+1/log(x+2)).
    """

    preset = "profile_product"

    def __init__(self, phi_kind: str = "one", psi_kind: str = "power",
                 s: float = 1.0, alpha: float = np.pi / 6):
        self.phi = _Profile(phi_kind, s)
        self.psi = _Profile(psi_kind, s)
        self.s = float(s)
        self.alpha = alpha

    def _map(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        return self.phi.antiderivative(z), y * self.psi.value(z)

    def _jacobian(self, z, y):
        z, y = np.broadcast_arrays(z, y)
        jac = np.zeros(z.shape + (2, 2), dtype=complex)
        jac[..., 0, 0] = self.phi.value(z)
        jac[..., 1, 0] = y * self.psi.derivative(z)
        jac[..., 1, 1] = self.psi.value(z)
        return jac


_PRESETS = {
    "straight": StraightEnd,
    "log_shear": LogShearEnd,
    "profile_product": ProfileProductEnd,
}


def end_map(preset: str, **params) -> EndMap:
    """Construct an end-map from its preset name (CLI entry point)."""
    try:
        cls = _PRESETS[preset]
    except KeyError:
        raise ValueError(
            f"unknown end preset {preset!r}, expected one of {sorted(_PRESETS)}"
        ) from None
    return cls(**params)


def evaluate_map(em: EndMap, z, y):
    """Physical coordinates (zeta, eta) = kappa(z, y)."""
    return em.map_point(z, y)


def jacobian(em: EndMap, z, y):
    """Jacobian matrix kappa'(z, y)."""
    return em.jacobian(z, y)


def metric_g(em: EndMap, z, y) -> MetricSample:
    """Induced metric sample g(z, y) = kappa'^T kappa'."""
    return MetricSample(g=em.metric(z, y), z=z, y=y)


def stabilization_bound(em: EndMap, X: float, samples: int = 48) -> float:
    """Sampled sup of ||g - Id|| over Re z >= X inside the sector.

    The scan covers Re z in [X, 2X], the full angular range |arg z| <= alpha
    and a few transverse stations; the deviation decays toward infinity, so
    the edge Re z = X dominates and the result is nonincreasing in X up to
    sampling resolution.
    """
    if X <= 0:
        raise ValueError(f"X must be positive, got {X}")
    t = np.linspace(X, 2.0 * X, max(2, samples))
    # stay a hair inside the open sector so the analyticity check passes
    theta = np.linspace(-em.alpha, em.alpha, 21) * (1.0 - 1e-12)
    y = np.linspace(0.0, 1.0, 5)
    # z with Re z = t along each angular station
    z = (t[:, None] / np.cos(theta)[None, :]) * np.exp(1j * theta)[None, :]
    g = em.metric(z[..., None], y[None, None, :])
    dev = g - np.eye(2)
    return float(np.max(max_entry_norm(dev)))
