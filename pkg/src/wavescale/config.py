"""Run configuration: a single versioned JSON document, strictly validated.

Every invariant violation yields a ConfigError naming the offending
field path, and unknown keys are rejected so typos cannot silently fall
back to defaults.  The validated document is kept verbatim (the raw
dict) for echoing into result files, which keeps reruns byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import CrossSection, EndMap, end_map, stabilization_bound
from .assembly import Grid
from .scaling import ScalingProfile
from .vectors import GaussianModeVector

SCHEMA = "wavescale-config/1"


class ConfigError(ValueError):
    """Configuration document violates the schema or an invariant."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config error at '{path}': {message}")


def _require_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(obj, path, allowed):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")


def _get(obj, path, key, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    return obj[key]


def _as_number(val, path, positive=False, minimum=None):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    if positive and val <= 0:
        raise ConfigError(path, f"must be positive, got {val}")
    if minimum is not None and val < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {val}")
    return float(val)


def _as_int(val, path, minimum=None):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(path, f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {val}")
    return val


def _as_complex(val, path):
    if not (isinstance(val, (list, tuple)) and len(val) == 2):
        raise ConfigError(path, f"expected [re, im], got {val!r}")
    return complex(_as_number(val[0], f"{path}[0]"), _as_number(val[1], f"{path}[1]"))


def _parse_vector(obj, path) -> GaussianModeVector:
    obj = _require_mapping(obj, path)
    _check_keys(obj, path, {"terms"})
    terms_raw = _get(obj, path, "terms", required=True)
    if not isinstance(terms_raw, list) or not terms_raw:
        raise ConfigError(f"{path}.terms", "expected a nonempty list of terms")
    from .vectors import GaussianTerm

    terms = []
    for i, t in enumerate(terms_raw):
        tpath = f"{path}.terms[{i}]"
        t = _require_mapping(t, tpath)
        _check_keys(t, tpath, {"gamma", "center", "coeffs", "mode"})
        gamma = _as_number(_get(t, tpath, "gamma", required=True),
                           f"{tpath}.gamma", positive=True)
        center = _as_number(_get(t, tpath, "center", 0.0), f"{tpath}.center")
        coeffs_raw = _get(t, tpath, "coeffs", [[1.0, 0.0]])
        if not isinstance(coeffs_raw, list) or not coeffs_raw:
            raise ConfigError(f"{tpath}.coeffs", "expected a nonempty list")
        coeffs = tuple(_as_complex(c, f"{tpath}.coeffs[{j}]")
                       for j, c in enumerate(coeffs_raw))
        mode = _as_int(_get(t, tpath, "mode", 1), f"{tpath}.mode", minimum=1)
        terms.append(GaussianTerm(gamma=gamma, center=center, coeffs=coeffs,
                                  mode=mode))
    return GaussianModeVector(terms=tuple(terms))


@dataclass
class RunConfig:
    """Validated run configuration with constructed domain objects."""

    raw: dict = field(repr=False)
    seed: int
    cs: CrossSection
    em: EndMap
    profile: ScalingProfile
    lambdas: list
    grid: Grid
    # analysis tolerances
    J: int
    angular_tol: float
    radial_margin: float
    stability_tol: float
    real_tol: float
    ray_margin: float
    match_radius: float
    eig_tol: float
    # subcommand blocks (already validated, still dict-shaped)
    portrait: dict
    resonances: dict
    resolvent: dict


_TOP_KEYS = {"schema", "seed", "geometry", "profile", "lambdas", "grid",
             "analysis", "portrait", "resonances", "resolvent"}
_GEOM_KEYS = {"preset", "alpha", "phi", "psi", "s"}
_ANALYSIS_DEFAULTS = {
    "J": 5, "angular_tol": 0.05, "radial_margin": 0.5, "stability_tol": 1e-3,
    "real_tol": 1e-6, "ray_margin": 0.5, "match_radius": 0.05, "eig_tol": 1e-8,
}


def parse_config(doc: dict) -> RunConfig:
    doc = _require_mapping(doc, "$")
    _check_keys(doc, "$", _TOP_KEYS)
    schema = _get(doc, "$", "schema", required=True)
    if schema != SCHEMA:
        raise ConfigError("$.schema", f"expected {SCHEMA!r}, got {schema!r}")
    seed = _as_int(_get(doc, "$", "seed", 0), "$.seed", minimum=0)

    geom = _require_mapping(_get(doc, "$", "geometry", required=True), "$.geometry")
    _check_keys(geom, "$.geometry", _GEOM_KEYS)
    preset = _get(geom, "$.geometry", "preset", required=True)
    kwargs = {}
    if "alpha" in geom:
        alpha = _as_number(geom["alpha"], "$.geometry.alpha", positive=True)
        if alpha >= np.pi / 4:
            raise ConfigError("$.geometry.alpha",
                              f"sector half-angle must be < pi/4, got {alpha}")
        kwargs["alpha"] = alpha
    if preset == "profile_product":
        kwargs["phi_kind"] = _get(geom, "$.geometry", "phi", "one")
        kwargs["psi_kind"] = _get(geom, "$.geometry", "psi", "power")
        kwargs["s"] = _as_number(_get(geom, "$.geometry", "s", 1.0),
                                 "$.geometry.s", positive=True)
    elif "phi" in geom or "psi" in geom or "s" in geom:
        raise ConfigError("$.geometry.phi",
                          f"profile kinds only apply to preset 'profile_product', "
                          f"not {preset!r}")
    try:
        em = end_map(preset, **kwargs)
    except ValueError as exc:
        raise ConfigError("$.geometry.preset", str(exc)) from None

    prof_doc = _require_mapping(_get(doc, "$", "profile", required=True), "$.profile")
    _check_keys(prof_doc, "$.profile", {"R", "R_tilde"})
    R = _as_number(_get(prof_doc, "$.profile", "R", required=True),
                   "$.profile.R", positive=True)
    R_tilde = _as_number(_get(prof_doc, "$.profile", "R_tilde", required=True),
                         "$.profile.R_tilde")
    if not R < R_tilde:
        raise ConfigError("$.profile.R_tilde",
                          f"need R < R_tilde, got R={R}, R_tilde={R_tilde}")
    profile = ScalingProfile(R=R, R_tilde=R_tilde)

    grid_doc = _require_mapping(_get(doc, "$", "grid", required=True), "$.grid")
    _check_keys(grid_doc, "$.grid", {"X_max", "Nx", "Ny"})
    X_max = _as_number(_get(grid_doc, "$.grid", "X_max", required=True),
                       "$.grid.X_max", positive=True)
    Nx = _as_int(_get(grid_doc, "$.grid", "Nx", required=True), "$.grid.Nx", minimum=2)
    Ny = _as_int(_get(grid_doc, "$.grid", "Ny", required=True), "$.grid.Ny", minimum=2)
    if not R_tilde < X_max - 2.0:
        raise ConfigError("$.grid.X_max",
                          f"need R_tilde < X_max - 2 so the scaled region is "
                          f"interior, got R_tilde={R_tilde}, X_max={X_max}")
    grid = Grid(X_max=X_max, Nx=Nx, Ny=Ny)

    lam_raw = _get(doc, "$", "lambdas", required=True)
    if not isinstance(lam_raw, list) or not lam_raw:
        raise ConfigError("$.lambdas", "expected a nonempty list of [re, im] pairs")
    lambdas = []
    for i, pair in enumerate(lam_raw):
        lam = _as_complex(pair, f"$.lambdas[{i}]")
        if abs(lam) >= np.sin(em.alpha):
            raise ConfigError(
                f"$.lambdas[{i}]",
                f"|lambda|={abs(lam):.6g} must be < sin(alpha)={np.sin(em.alpha):.6g}")
        lambdas.append(lam)

    ana = _require_mapping(_get(doc, "$", "analysis", {}), "$.analysis")
    _check_keys(ana, "$.analysis", set(_ANALYSIS_DEFAULTS))
    tols = {}
    for key, default in _ANALYSIS_DEFAULTS.items():
        if key == "J":
            tols[key] = _as_int(_get(ana, "$.analysis", key, default),
                                "$.analysis.J", minimum=1)
        else:
            tols[key] = _as_number(_get(ana, "$.analysis", key, default),
                                   f"$.analysis.{key}", positive=True)

    portrait = _parse_portrait(_get(doc, "$", "portrait", {}))
    resonances = _parse_resonances(_get(doc, "$", "resonances", {}))
    resolvent = _parse_resolvent(_get(doc, "$", "resolvent", {}))

    cs = CrossSection(j_max=max(tols["J"], 10))
    if stabilization_bound(em, R) > 0.2:
        warnings.warn(
            f"scaling onset R={R} may be too small: the end deviates from the "
            f"flat cylinder by {stabilization_bound(em, R):.3f} beyond R "
            "(consider a larger R)", RuntimeWarning, stacklevel=2)

    return RunConfig(raw=doc, seed=seed, cs=cs, em=em, profile=profile,
                     lambdas=lambdas, grid=grid, portrait=portrait,
                     resonances=resonances, resolvent=resolvent, **tols)


def _parse_portrait(obj) -> dict:
    obj = _require_mapping(obj, "$.portrait")
    _check_keys(obj, "$.portrait", {"mode", "shifts", "k"})
    mode = _get(obj, "$.portrait", "mode", "near")
    if mode not in ("near", "all"):
        raise ConfigError("$.portrait.mode", f"expected 'near' or 'all', got {mode!r}")
    shifts = _get(obj, "$.portrait", "shifts")
    if shifts is not None:
        if not isinstance(shifts, list) or not shifts:
            raise ConfigError("$.portrait.shifts", "expected a nonempty list")
        shifts = [_as_complex(s, f"$.portrait.shifts[{i}]")
                  for i, s in enumerate(shifts)]
    k = _as_int(_get(obj, "$.portrait", "k", 40), "$.portrait.k", minimum=1)
    return {"mode": mode, "shifts": shifts, "k": k}


def _parse_resonances(obj) -> dict:
    obj = _require_mapping(obj, "$.resonances")
    _check_keys(obj, "$.resonances", {"profiles", "shifts", "k", "refine"})
    profs = _get(obj, "$.resonances", "profiles", [[4.0, 6.0], [5.0, 8.0]])
    if not isinstance(profs, list) or len(profs) < 1:
        raise ConfigError("$.resonances.profiles", "expected a list of [R, R_tilde]")
    profiles = []
    for i, pair in enumerate(profs):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ConfigError(f"$.resonances.profiles[{i}]",
                              f"expected [R, R_tilde], got {pair!r}")
        R = _as_number(pair[0], f"$.resonances.profiles[{i}][0]", positive=True)
        Rt = _as_number(pair[1], f"$.resonances.profiles[{i}][1]")
        if not R < Rt:
            raise ConfigError(f"$.resonances.profiles[{i}]",
                              f"need R < R_tilde, got {pair!r}")
        profiles.append(ScalingProfile(R=R, R_tilde=Rt))
    shifts = _get(obj, "$.resonances", "shifts")
    if shifts is not None:
        shifts = [_as_complex(s, f"$.resonances.shifts[{i}]")
                  for i, s in enumerate(shifts)]
    k = _as_int(_get(obj, "$.resonances", "k", 10), "$.resonances.k", minimum=1)
    refine = _get(obj, "$.resonances", "refine", True)
    if not isinstance(refine, bool):
        raise ConfigError("$.resonances.refine", f"expected a boolean, got {refine!r}")
    return {"profiles": profiles, "shifts": shifts, "k": k, "refine": refine}


def _parse_resolvent(obj) -> dict:
    obj = _require_mapping(obj, "$.resolvent")
    _check_keys(obj, "$.resolvent",
                {"mu_start", "mu_stop", "samples", "F", "G", "min_ray_distance"})
    out = {"mu_start": None, "mu_stop": None, "samples": 21,
           "F": None, "G": None, "min_ray_distance": 0.05}
    if "mu_start" in obj:
        out["mu_start"] = _as_complex(obj["mu_start"], "$.resolvent.mu_start")
    if "mu_stop" in obj:
        out["mu_stop"] = _as_complex(obj["mu_stop"], "$.resolvent.mu_stop")
    out["samples"] = _as_int(_get(obj, "$.resolvent", "samples", 21),
                             "$.resolvent.samples", minimum=2)
    if "F" in obj:
        out["F"] = _parse_vector(obj["F"], "$.resolvent.F")
    if "G" in obj:
        out["G"] = _parse_vector(obj["G"], "$.resolvent.G")
    out["min_ray_distance"] = _as_number(
        _get(obj, "$.resolvent", "min_ray_distance", 0.05),
        "$.resolvent.min_ray_distance", positive=True)
    return out


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config(doc)
