"""Partial analytic vectors, resolvent matrix elements, continuation scans.

The test family consists of finite sums of Gaussian-polynomial-mode
terms

    f(z, y) = sum_t  exp(-gamma_t (z - z0_t)^2) P_t(z) Phi_{j_t}(y),

entire in the axial variable z with super-polynomial decay in every
sector |Im z| <= (1-eps) Re z, which is exactly what composing with the
scaled coordinate x + lambda*v(x) requires.  For such F, G the matrix
element of the plain resolvent equals the deformed-pencil element

    ((K_l - mu M_l)^-1 (F scaled by lambda),  G scaled by conj(lambda))

paired with the weighted mass form; for real lambda the identity is
exact in the continuum, and for complex lambda the right-hand side
provides the meromorphic continuation of the left across the essential
spectrum, with resonances appearing as poles.

The Weierstrass mollifier demonstrates density of the family: a
compactly supported profile h is recovered along the deformed contour by

    f_l(z) = sqrt(l/pi) int h(x) exp[-l (z - x - lambda v(x))^2]
                          (1 + lambda v'(x)) dx,

whose pullback g_l(x) = f_l(x + lambda v(x)) converges to h in L2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .analysis import Grid1D, RayFamily, essential_rays, fiber_distance
from .assembly import Grid, ScaledOperator, assemble_deformed, pairing_lambda, \
    solve_shifted
from .geometry import CrossSection, EndMap
from .scaling import ScalingProfile, _bump_step

_DEFAULT_CS = CrossSection(j_max=10)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class GaussianTerm:
    """One Gaussian-polynomial-mode term of a partial analytic vector."""

    gamma: float
    center: float
    coeffs: tuple
    mode: int = 1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive for sector decay, got {self.gamma}")
        if self.mode < 1:
            raise ValueError(f"mode index must be >= 1, got {self.mode}")
        if len(self.coeffs) == 0:
            raise ValueError("term needs at least one polynomial coefficient")


@dataclass(frozen=True)
class GaussianModeVector:
    """Finite Gaussian-polynomial-mode sum; entire in z with sector decay."""

    terms: tuple

    @staticmethod
    def single(gamma: float, center: float, coeffs=(1.0,), mode: int = 1):
        return GaussianModeVector(terms=(GaussianTerm(
            gamma=float(gamma), center=float(center),
            coeffs=tuple(complex(c) for c in coeffs), mode=int(mode)),))

    def axial(self, z, mode: int):
        """Axial factor of the given transverse mode at (complex) z."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for term in self.terms:
            if term.mode != mode:
                continue
            poly = np.zeros_like(z)
            for c in term.coeffs[::-1]:
                poly = poly * z + c
            out = out + np.exp(-term.gamma * (z - term.center) ** 2) * poly
        return out

    def modes(self):
        return sorted({t.mode for t in self.terms})

    def __call__(self, z, y, cs: CrossSection = _DEFAULT_CS):
        z = np.asarray(z, dtype=complex)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(z.shape, y.shape), dtype=complex)
        for j in self.modes():
            out = out + self.axial(z, j) * cs.eigenfunction(j, y)
        return out


def evaluate_scaled(F: GaussianModeVector, profile: ScalingProfile,
                    lam: complex, grid: Grid,
                    cs: CrossSection = _DEFAULT_CS) -> np.ndarray:
    """Samples of f(x + lambda v(x), y) on the interior grid, dof order."""
    x, y = grid.interior_coords()
    z = x + lam * profile.v(x)
    return F(z, y, cs)


@dataclass
class ResolventTrace:
    """Resolvent matrix element sampled along a path of spectral parameters."""

    mu: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    lam: complex
    grid: Grid
    metadata: dict = field(default_factory=dict)


def resolvent_element(grid: Grid, em: EndMap, profile: ScalingProfile,
                      lam: complex, mu: complex, F: GaussianModeVector,
                      G: GaussianModeVector, cs: CrossSection = _DEFAULT_CS,
                      op: ScaledOperator | None = None) -> complex:
    """Matrix element of the deformed resolvent over scaled vectors.

    Computes ((K - mu M)^-1 M f_lambda, g_conj(lambda))_M where f_lambda
    samples F along x + lambda v(x) and the pairing conjugates only the
    second argument.  At lambda = 0 this is the plain matrix element of
    the selfadjoint resolvent; for nonreal lambda it continues it in mu.
    """
    if fiber_distance(cs, lam, mu) <= 0.0:
        raise ValueError(
            f"mu={mu} lies on the essential-spectrum rays for lambda={lam}")
    if op is None:
        op = assemble_deformed(grid, em, profile, lam)
    fvec = evaluate_scaled(F, profile, lam, grid, cs)
    gvec = evaluate_scaled(G, profile, np.conj(lam), grid, cs)
    u = solve_shifted(op, mu, fvec)
    return pairing_lambda(op, u, gvec)


@dataclass
class ContinuationResult:
    """Traces of one mu path for several scaling parameters."""

    traces: list
    agreement: float  # max relative gap between any two traces

    def __iter__(self):
        return iter(self.traces)


def continuation_scan(grid: Grid, em: EndMap, profile: ScalingProfile,
                      lam_list, mu_path, F: GaussianModeVector,
                      G: GaussianModeVector, cs: CrossSection = _DEFAULT_CS,
                      min_ray_distance: float = 0.05,
                      J: int | None = None) -> ContinuationResult:
    """Sample the resolvent element along mu_path for each lambda.

    All traces share the identical mu samples; the agreement metric is
    the largest uniform gap between two traces relative to the largest
    trace magnitude.  The path must stay clear of every variant's rays.
    """
    lam_list = [complex(l) for l in lam_list]
    if len(lam_list) < 2:
        raise ValueError("continuation scan needs at least two scaling parameters")
    mu_path = np.asarray(mu_path, dtype=complex)
    J = J if J is not None else cs.j_max
    for lam in lam_list:
        rays = essential_rays(cs, lam, J)
        dist = rays.distance(mu_path)
        if np.any(dist < min_ray_distance):
            bad = mu_path[np.argmin(dist)]
            raise ValueError(
                f"mu path crosses an essential-spectrum ray for lambda={lam} "
                f"at mu={bad} (distance {dist.min():.3e} < {min_ray_distance})")

    traces = []
    for lam in lam_list:
        op = assemble_deformed(grid, em, profile, lam)
        fvec = evaluate_scaled(F, profile, lam, grid, cs)
        gvec = evaluate_scaled(G, profile, np.conj(lam), grid, cs)
        values = np.empty(mu_path.shape, dtype=complex)
        residuals = np.empty(mu_path.shape, dtype=float)
        for i, mu in enumerate(mu_path):
            u, res = solve_shifted(op, mu, fvec, return_residual=True)
            values[i] = pairing_lambda(op, u, gvec)
            residuals[i] = res
        traces.append(ResolventTrace(mu=mu_path.copy(), values=values,
                                     residuals=residuals, lam=lam, grid=grid))
    scale = max(np.max(np.abs(t.values)) for t in traces)
    gap = 0.0
    for i, a in enumerate(traces):
        for b in traces[i + 1:]:
            gap = max(gap, float(np.max(np.abs(a.values - b.values)) / scale))
    return ContinuationResult(traces=traces, agreement=gap)


def circle_path(mu0: complex, radius: float, n: int = 32) -> np.ndarray:
    """n equispaced points on the circle |mu - mu0| = radius (counterclockwise)."""
    if n < 16:
        raise ValueError(f"contour needs at least 16 points, got {n}")
    angles = 2.0 * np.pi * np.arange(n) / n
    return mu0 + radius * np.exp(1j * angles)


def pole_probe(trace: ResolventTrace, mu0: complex,
               rays: RayFamily | None = None,
               exclude=None) -> complex:
    """First-order residue estimate from a circular trace around mu0.

    Trapezoid rule for (1/2pi i) times the contour integral over the
    closed circle of trace samples; a nonzero result (above the
    quadrature noise floor) certifies a pole visible to the (F, G) pair.
    """
    mu = trace.mu
    n = len(mu)
    if n < 16:
        raise ValueError(f"contour needs at least 16 points, got {n}")
    radii = np.abs(mu - mu0)
    if radii.max() - radii.min() > 0.05 * radii.mean():
        raise ValueError("trace samples do not form a circle around mu0")
    radius = float(radii.mean())
    steps = _wrap(np.diff(np.angle(mu - mu0)))
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("trace samples do not wind monotonically around mu0")
    if rays is not None and np.any(rays.distance(mu) <= 0.0):
        raise ValueError(
            f"contour around mu0={mu0} intersects an essential-spectrum ray")
    if exclude is not None:
        other = np.asarray(list(exclude), dtype=complex)
        if other.size and np.any(np.abs(other - mu0) <= radius * 1.05):
            raise ValueError(
                f"contour around mu0={mu0} encloses another candidate")
    # trapezoid in the angle parameter: d(mu) = i (mu - mu0) d(theta), which is
    # free of the sinc bias a chordwise rule would carry
    orientation = 1.0 if steps[0] > 0 else -1.0
    return complex(orientation * np.sum(trace.values * (mu - mu0)) / n)


def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class SmoothBump:
    """C-infinity plateau bump supported on (start, stop)."""

    start: float
    stop: float
    ramp: float = 1.0

    def __post_init__(self):
        if not (self.ramp > 0 and self.stop - self.start > 2 * self.ramp):
            raise ValueError(
                f"bump needs stop - start > 2*ramp > 0, got "
                f"({self.start}, {self.stop}, ramp={self.ramp})")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _bump_step((x - self.start) / self.ramp) * \
            _bump_step((self.stop - x) / self.ramp)


@dataclass
class MollifierResult:
    """Pullback samples of the mollified profile and its L2 recovery error."""

    x: np.ndarray
    g: np.ndarray
    l2_error: float
    quad_error: float
    ell: float
    lam: complex


def weierstrass_mollify(h: SmoothBump, ell: float, profile: ScalingProfile,
                        lam: complex, grid1d: Grid1D,
                        rtol: float = 1e-10) -> MollifierResult:
    """Gaussian mollification of h along the deformed contour.

    Evaluates f_l at z = x + lambda v(x) for every grid point x by
    adaptive Gauss-Kronrod quadrature over supp h (the compact support
    makes tail truncation exact) and reports the discrete L2 distance of
    the pullback from h.  The transverse mode factor is L2-normalized
    and drops out of the error.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if not (0.0 < h.start and h.stop < grid1d.x_max - 2.0):
        raise ValueError(
            f"profile support ({h.start}, {h.stop}) must lie inside "
            f"(0, {grid1d.x_max - 2.0})")
    x = grid1d.points()
    zt = x + lam * profile.v(x)
    pref = np.sqrt(ell / np.pi)

    def integrand(s):
        w = zt - s - lam * profile.v(s)
        val = h(s) * np.exp(-ell * w * w) * (1.0 + lam * profile.dv(s))
        return np.concatenate([val.real, val.imag])

    raw, err = quad_vec(integrand, h.start, h.stop, epsrel=rtol, epsabs=1e-13)
    g = pref * (raw[:len(x)] + 1j * raw[len(x):])
    scale = max(1.0, float(np.max(np.abs(g))))
    if err > 1e-6 * scale * len(x) ** 0.5:
        raise QuadratureError(
            f"mollifier quadrature reached only {err:.3e} "
            f"(requested epsrel={rtol})")
    hx = h(x)
    l2 = float(np.sqrt(grid1d.h * np.sum(np.abs(hx - g) ** 2)))
    return MollifierResult(x=x, g=g, l2_error=l2, quad_error=float(err),
                           ell=float(ell), lam=complex(lam))
