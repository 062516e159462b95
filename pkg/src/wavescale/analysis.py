"""Interpretation of computed spectra: rays, classification, resonances.

Under the scaling x -> x + lambda*v(x) the essential spectrum of the
deformed operator consists of rays

    { nu_j + exp(-2i arg(1+lambda)) t : t >= 0 },   j = 1, 2, ...

hanging off the transverse thresholds nu_j = (j pi)^2.  Discrete
eigenvalues do not move as lambda or v vary (as long as no ray sweeps
over them), which is what separates genuine resonances / eigenvalues
from discretization artifacts of the rays: artifacts track the rays,
true candidates stay put across lambda- and profile-variants and settle
under grid refinement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .assembly import Grid, assemble_deformed
from .eigensolve import eig_near
from .geometry import CrossSection, EndMap
from .scaling import ScalingProfile, _bump_step, check_scaling_parameter


@dataclass(frozen=True)
class RayFamily:
    """Essential-spectrum rays: common angle, one base point per threshold."""

    thresholds: np.ndarray
    angle: float
    lam: complex

    def distance(self, mu) -> np.ndarray:
        """Euclidean distance from mu to the nearest ray (exact, no sampling)."""
        mu = np.asarray(mu, dtype=complex)
        w = (mu[..., None] - self.thresholds) * np.exp(-1j * self.angle)
        d = np.where(w.real <= 0.0, np.abs(w), np.abs(w.imag))
        return np.min(d, axis=-1)


@dataclass
class SpectrumEntry:
    mu: complex
    tag: str  # ray | discrete | resonance | unresolved
    ray_index: int | None = None
    stability: dict | None = None

    def to_dict(self) -> dict:
        out = {"re": float(self.mu.real), "im": float(self.mu.imag), "tag": self.tag}
        if self.ray_index is not None:
            out["ray_index"] = int(self.ray_index)
        if self.stability is not None:
            out["stability"] = self.stability
        return out


@dataclass
class SpectrumReport:
    entries: list[SpectrumEntry]
    metadata: dict = field(default_factory=dict)

    def tagged(self, tag: str) -> list[SpectrumEntry]:
        return [e for e in self.entries if e.tag == tag]

    def to_dict(self) -> dict:
        return {"metadata": self.metadata,
                "entries": [e.to_dict() for e in self.entries]}


def essential_rays(cs: CrossSection, lam: complex, J: int) -> RayFamily:
    """Ray family for J thresholds at angle -2 arg(1+lambda)."""
    if J < 1:
        raise ValueError(f"need at least one ray, got J={J}")
    return RayFamily(thresholds=cs.thresholds(J),
                     angle=float(-2.0 * np.angle(1.0 + lam)),
                     lam=complex(lam))


def _wrap_angle(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def classify(eigs, rays: RayFamily, angular_tol: float = 0.05,
             radial_margin: float = 0.5) -> SpectrumReport:
    """Tag eigenvalues as ray approximants or discrete candidates.

    An eigenvalue is a ray approximant when its angular offset from some
    ray, seen from that ray's base point, is below angular_tol; points
    within radial_margin of a base point are excluded from that ray's
    test because the angle degenerates there.
    """
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        raise ValueError("classify needs a nonempty eigenvalue list")
    entries = []
    for mu in eigs:
        rel = mu - rays.thresholds
        with np.errstate(invalid="ignore"):
            ang = np.abs(_wrap_angle(np.angle(rel) - rays.angle))
        eligible = np.abs(rel) > radial_margin
        ang = np.where(eligible, ang, np.inf)
        j = int(np.argmin(ang))
        if ang[j] < angular_tol:
            entries.append(SpectrumEntry(mu=complex(mu), tag="ray", ray_index=j + 1))
        else:
            entries.append(SpectrumEntry(mu=complex(mu), tag="discrete"))
    return SpectrumReport(entries=entries,
                          metadata={"angle": rays.angle,
                                    "thresholds": rays.thresholds.tolist(),
                                    "angular_tol": angular_tol,
                                    "radial_margin": radial_margin})


def best_fit_ray_angle(eigs, base: float) -> float:
    """Least-squares direction of eigenvalues through the anchor point.

    Minimizes the summed squared transverse offsets of mu - base to a
    line through the origin; closed form 0.5*arg(sum (mu-base)^2).
    """
    w = np.asarray(eigs, dtype=complex) - base
    return float(0.5 * np.angle(np.sum(w * w)))


def match_candidates(variant_values: list[np.ndarray], match_radius: float):
    """Group nearby candidates across variants, anchored on the first list.

    Returns a list of (anchor, values) where values has one entry per
    variant or None when that variant has no candidate within
    match_radius*(1+|anchor|).
    """
    anchors = np.asarray(variant_values[0], dtype=complex)
    groups = []
    for mu in anchors:
        tol = match_radius * (1.0 + abs(mu))
        row = [complex(mu)]
        for other in variant_values[1:]:
            other = np.asarray(other, dtype=complex)
            if other.size == 0:
                row.append(None)
                continue
            d = np.abs(other - mu)
            i = int(np.argmin(d))
            row.append(complex(other[i]) if d[i] <= tol else None)
        groups.append((complex(mu), row))
    return groups


def _drift(values) -> float:
    vals = [v for v in values if v is not None]
    if len(vals) < 2:
        return np.inf
    vals = np.asarray(vals)
    return float(np.max(np.abs(vals[:, None] - vals[None, :])))


def promote_candidates(groups_coarse, groups_fine, ray_families,
                       stability_tol: float, real_tol: float,
                       ray_margin: float, match_radius: float):
    """Stability triage of matched candidate groups.

    A candidate becomes a resonance (nonreal) or a discrete eigenvalue
    candidate (real up to real_tol) when it is matched in every variant,
    sits at least ray_margin from every ray of every variant, its drift
    across variants is below stability_tol*(1+|mu|) on the fine grid and
    the fine drift improves on the coarse one.  Everything else is
    reported as unresolved with its measured drifts.
    """
    fine_anchors = np.asarray([g[0] for g in groups_fine], dtype=complex)
    entries = []
    for anchor, values in groups_coarse:
        drift_coarse = _drift(values)
        group_fine = None
        if fine_anchors.size:
            d = np.abs(fine_anchors - anchor)
            i = int(np.argmin(d))
            if d[i] <= match_radius * (1.0 + abs(anchor)):
                group_fine = groups_fine[i]
        drift_fine = _drift(group_fine[1]) if group_fine else np.inf
        fine_vals = [v for v in (group_fine[1] if group_fine else []) if v is not None]
        mu = complex(np.mean(fine_vals)) if fine_vals else complex(anchor)
        ray_dist = float(min(rf.distance(mu) for rf in ray_families))
        stability = {
            "drift_coarse": float(drift_coarse),
            "drift_fine": float(drift_fine),
            "ray_distance": ray_dist,
            "variant_values": [[v.real, v.imag] if v is not None else None
                               for v in values],
        }
        complete = all(v is not None for v in values) and group_fine is not None \
            and all(v is not None for v in group_fine[1])
        scale = 1.0 + abs(mu)
        if complete and ray_dist >= ray_margin \
                and drift_fine < stability_tol * scale \
                and drift_fine < drift_coarse:
            # a nonreal tag must clear the measured drift, not just real_tol:
            # an imaginary part below the candidate's own scatter is noise
            if abs(mu.imag) > max(real_tol * scale, drift_fine):
                tag = "resonance"
            else:
                tag = "discrete"
        else:
            tag = "unresolved"
        entries.append(SpectrumEntry(mu=mu, tag=tag, stability=stability))
    return entries


def detect_resonances(cs: CrossSection, em: EndMap, grid: Grid,
                      lam_list, profiles, shifts, k: int = 12, *,
                      stability_tol: float = 1e-3, real_tol: float = 1e-6,
                      ray_margin: float = 0.5, angular_tol: float = 0.05,
                      radial_margin: float = 0.5, match_radius: float = 0.05,
                      refine: bool = True, J: int | None = None,
                      tol: float = 1e-8) -> SpectrumReport:
    """Cross-variant resonance detection.

    Runs the eigensolver for every (lambda, profile) variant at the base
    grid and (by default) a refined grid, classifies each run against its
    own rays, and promotes only candidates that are stable across all
    variants and improve under refinement.
    """
    lam_list = [complex(l) for l in lam_list]
    if len(lam_list) < 2:
        raise ValueError("resonance detection needs at least 2 scaling parameters")
    args = [np.angle(1.0 + l) for l in lam_list]
    if min(abs(a - b) for i, a in enumerate(args) for b in args[i + 1:]) < 1e-12:
        raise ValueError("scaling parameters must have distinct arg(1+lambda)")
    profiles = list(profiles)
    if len(profiles) < 2:
        raise ValueError("resonance detection needs at least 2 profile variants")

    J = J if J is not None else cs.j_max
    variants = [(lam, prof) for lam in lam_list for prof in profiles]
    ray_families = [essential_rays(cs, lam, J) for lam, _ in variants]

    def candidates(run_grid: Grid):
        per_variant = []
        for lam, prof in variants:
            op = assemble_deformed(run_grid, em, prof, lam)
            found = []
            for shift in shifts:
                res = eig_near(op.K, op.M, shift, k, tol=tol)
                found.extend(res.eigenvalues.tolist())
            found = _dedupe(np.asarray(found, dtype=complex))
            rays = essential_rays(cs, lam, J)
            report = classify(found, rays, angular_tol, radial_margin)
            per_variant.append(np.asarray(
                [e.mu for e in report.tagged("discrete")], dtype=complex))
        return per_variant

    coarse = match_candidates(candidates(grid), match_radius)
    fine = match_candidates(candidates(grid.refined()), match_radius) \
        if refine else coarse
    entries = promote_candidates(coarse, fine, ray_families, stability_tol,
                                 real_tol, ray_margin, match_radius)
    meta = {
        "lambdas": [[l.real, l.imag] for l in lam_list],
        "profiles": [[p.R, p.R_tilde] for p in profiles],
        "grid": [grid.X_max, grid.Nx, grid.Ny],
        "refined": refine,
        "stability_tol": stability_tol,
        "real_tol": real_tol,
        "ray_margin": ray_margin,
    }
    return SpectrumReport(entries=entries, metadata=meta)


def _dedupe(vals: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    """Merge near-identical eigenvalues from overlapping shift windows."""
    if vals.size == 0:
        return vals
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    keep = [vals[0]]
    for mu in vals[1:]:
        if abs(mu - keep[-1]) > rel * (1.0 + abs(mu)):
            keep.append(mu)
    return np.asarray(keep)


def sector_check(op, trial_count: int, alpha: float, sigma: float = 0.1,
                 seed: int = 0) -> float:
    """Max |arg| of sampled Rayleigh quotients of the principal pencil.

    The quotient pairs the unconjugated stiffness form against the
    conjugated trial vector (a Hermitian pairing of the matrix numerical
    range) over the Hermitian mass quotient; for admissible lambda the
    result stays below 2*alpha + sigma.
    """
    if trial_count < 1:
        raise ValueError(f"trial_count must be >= 1, got {trial_count}")
    rng = np.random.default_rng(seed)
    n = op.K.shape[0]
    worst = 0.0
    remaining = trial_count
    while remaining > 0:
        batch = min(remaining, 512)
        U = rng.standard_normal((n, batch)) + 1j * rng.standard_normal((n, batch))
        norms = np.linalg.norm(U, axis=0)
        good = norms > 0
        U = U[:, good]  # zero draws are redrawn by the loop
        num = np.sum(np.conj(U) * (op.K @ U), axis=0)
        den = np.sum(np.conj(U) * (op.M @ U), axis=0)
        worst = max(worst, float(np.max(np.abs(np.angle(num / den)))))
        remaining -= int(np.count_nonzero(good))
    return worst


def fiber_distance(cs: CrossSection, lam: complex, mu: complex,
                   tau_max: float | None = None, tau_samples: int = 2001,
                   J: int | None = None) -> float:
    """Sampled distance of mu to the fiber-spectrum curves.

    Minimizes |mu - (1+lambda)^-2 tau^2 - nu_j| over a tau grid and the
    first J thresholds; zero exactly on the essential-spectrum rays.
    tau_max defaults to a value large enough for the curve to exit the
    window around mu.
    """
    J = J if J is not None else cs.j_max
    shift = (1.0 + lam) ** (-2.0)
    mu = complex(mu)
    reach = 2.0 * max(abs(mu - nu) for nu in cs.thresholds(J))
    if tau_max is None:
        tau_max = max(10.0, np.sqrt(1.5 * reach / abs(shift)))
    elif abs(shift) * tau_max**2 < reach:
        warnings.warn(
            f"tau_max={tau_max} may be too small for the fiber curve to exit "
            f"the window around mu={mu}", RuntimeWarning, stacklevel=2)
    tau = np.linspace(0.0, tau_max, tau_samples)
    curve = mu - shift * tau**2
    d = np.abs(curve[:, None] - cs.thresholds(J)[None, :])
    return float(d.min())


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D axial grid for the quasimode diagnostics."""

    x_max: float
    n: int

    def __post_init__(self):
        if self.x_max <= 0 or self.n < 8:
            raise ValueError(f"invalid 1D grid (x_max={self.x_max}, n={self.n})")

    @property
    def h(self) -> float:
        return self.x_max / self.n

    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.n + 1)


def _cutoff(s):
    """Smooth plateau cutoff: 1 on [2, 4], 0 outside (1, 5)."""
    return _bump_step(s - 1.0) * _bump_step(5.0 - s)


def quasimode_ratio(grid1d: Grid1D, lam: complex, j: int, ell: float,
                    cs: CrossSection | None = None, t: float = 4.0) -> float:
    """Residual-to-H2 ratio of the oscillating ray quasimode.

    The trial function cutoff(x/ell) * exp(i(1+lambda) sqrt(mu-nu_j) x)
    times the j-th transverse mode is fed to the fiber-direction operator
    at mu = nu_j + exp(-2i arg(1+lambda)) t, a point on the j-th ray where
    the exponent is purely oscillatory.  The transverse mode factors out
    analytically; derivatives are discrete second differences.  The ratio
    decays in ell, witnessing the failure of Fredholmness on the ray.
    """
    cs = cs if cs is not None else CrossSection(j_max=max(10, j))
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if t <= 0:
        raise ValueError(f"ray parameter t must be positive, got {t}")
    if grid1d.x_max < 5.0 * ell:
        raise ValueError(
            f"1D domain too short: x_max={grid1d.x_max} < 5*ell={5.0 * ell} "
            "(cutoff support not contained)"
        )
    lam = check_scaling_parameter(lam, np.pi / 4)
    nu = cs.threshold(j)
    mu = nu + np.exp(-2j * np.angle(1.0 + lam)) * t
    exponent = 1j * (1.0 + lam) * np.sqrt(mu - nu)  # purely imaginary on the ray

    x = grid1d.points()
    h = grid1d.h
    u = _cutoff(x / ell) * np.exp(exponent * x)

    d1 = np.zeros_like(u)
    d1[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    d2 = np.zeros_like(u)
    d2[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2

    c = (1.0 + lam) ** (-2.0)
    resid = nu * u - c * d2 - mu * u

    def l2(f):
        return np.sqrt(h * np.sum(np.abs(f) ** 2))

    num = l2(resid)
    den = np.sqrt(l2(d2) ** 2 + (1.0 + nu) * l2(d1) ** 2
                  + (1.0 + nu + nu**2) * l2(u) ** 2)
    return float(num / den)
