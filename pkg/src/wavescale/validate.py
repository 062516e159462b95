"""Machine-checkable invariant suite backing the `validate` subcommand.

Each check runs at small desk scale, measures a number, compares it to a
pinned tolerance, and reports {name, passed, measured, tolerance,
details}.  The suite covers the structural identities (complex symmetry,
reflection, determinism), the geometry/scaling analyticity laws, the
discretization convergence contracts and the spectral-interpretation
sanity checks.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import analysis, assembly, eigensolve, geometry, scaling, vectors
from .geometry import CrossSection, LogShearEnd, ProfileProductEnd, StraightEnd


def _check(name, measured, tolerance, passed, **details):
    return {"name": name, "passed": bool(passed), "measured": measured,
            "tolerance": tolerance, "details": details}


def _sector_points(em, n, seed, inner=0.8):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.3, 12.0, n)
    th = rng.uniform(-inner * em.alpha, inner * em.alpha, n)
    return r * np.exp(1j * th)


def _all_ends():
    return [StraightEnd(), LogShearEnd(),
            ProfileProductEnd("exp", "power", s=1.0),
            ProfileProductEnd("one", "log")]


def check_geometry_analyticity(seed=0):
    """Cauchy-Riemann residual of the metric entries at interior points."""
    h = 1e-5
    worst = 0.0
    for em in _all_ends():
        z = _sector_points(em, 20, seed)
        y = np.full(20, 0.37)
        gp = em.metric(z + h, y)
        gm = em.metric(z - h, y)
        gpi = em.metric(z + 1j * h, y)
        gmi = em.metric(z - 1j * h, y)
        dzbar = (gp - gm) / (2 * h) + 1j * (gpi - gmi) / (2 * h)
        dz = (gp - gm) / (2 * h) - 1j * (gpi - gmi) / (2 * h)
        rel = np.max(np.abs(dzbar)) / (2.0 * (1.0 + np.max(np.abs(dz))))
        worst = max(worst, float(rel))
    return _check("geometry_analyticity", worst, 1e-6, worst < 1e-6)


def check_geometry_reflection(seed=1):
    worst = 0.0
    for em in _all_ends():
        z = _sector_points(em, 50, seed)
        y = np.random.default_rng(seed + 1).uniform(0.0, 1.0, 50)
        diff = np.abs(em.metric(np.conj(z), y) - np.conj(em.metric(z, y)))
        worst = max(worst, float(diff.max()))
    return _check("geometry_reflection", worst, 1e-13, worst <= 1e-13)


def check_geometry_stabilization_decay():
    details = {}
    ok = True
    for em in _all_ends()[1:]:
        bounds = [geometry.stabilization_bound(em, X) for X in (4.0, 8.0, 16.0, 32.0)]
        details[em.preset if em.preset != "profile_product"
                else f"profile_product[{em.phi.kind},{em.psi.kind}]"] = bounds
        ok &= all(b2 <= b1 * 1.01 for b1, b2 in zip(bounds, bounds[1:]))
        ok &= bounds[-1] < bounds[0]
    return _check("geometry_stabilization_decay", details, "nonincreasing within 1%", ok)


def check_scaling_profile():
    prof = scaling.ScalingProfile(4.0, 6.0)
    x = np.linspace(0.0, 10.0, 1000)
    dv = prof.dv(x)
    flat = float(np.max(np.abs(prof.v(np.linspace(0, 4, 100)))))
    tail = float(np.max(np.abs(prof.dv(np.linspace(6, 10, 100)) - 1.0)))
    seam = max(float(prof.dv(4.0 + 1e-9)), float(abs(prof.dv(6.0 - 1e-9) - 1.0)))
    rng_ok = bool(np.all(dv >= 0.0) and np.all(dv <= 1.0))
    measured = {"flat_below_R": flat, "unit_slope_above": tail, "seam": seam}
    return _check("scaling_profile", measured, 1e-10,
                  flat == 0.0 and tail == 0.0 and seam < 1e-10 and rng_ok)


def check_scaling_lambda_analyticity():
    """Cauchy reconstruction of g_lambda entries over a lambda circle."""
    em = LogShearEnd()
    prof = scaling.ScalingProfile(4.0, 6.0)
    radius = 0.9 * np.sin(em.alpha)
    n = 64
    lams = radius * np.exp(2j * np.pi * np.arange(n) / n)
    x, y = np.array([7.3]), np.array([0.41])
    acc = np.zeros((1, 2, 2), dtype=complex)
    for lam in lams:
        acc += scaling.deformed_metric(em, prof, lam, x, y).g
    center = scaling.deformed_metric(em, prof, 0.0, x, y).g
    rel = float(np.max(np.abs(acc / n - center)) / np.max(np.abs(center)))
    return _check("scaling_lambda_analyticity", rel, 1e-8, rel < 1e-8)


def check_scaling_reflection(seed=2):
    rng = np.random.default_rng(seed)
    em = LogShearEnd()
    prof = scaling.ScalingProfile(4.0, 6.0)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(0.0, 12.0)
        y = rng.uniform(0.0, 1.0)
        lam = rng.uniform(-0.3, 0.3) + 1j * rng.uniform(-0.3, 0.3)
        if abs(lam) >= np.sin(em.alpha):
            lam = 0.4 * lam / abs(lam)
        a = scaling.deformed_metric(em, prof, np.conj(lam), np.array([x]), np.array([y])).g
        b = scaling.deformed_metric(em, prof, lam, np.array([x]), np.array([y])).g
        worst = max(worst, float(np.max(np.abs(a - np.conj(b)))))
    return _check("scaling_reflection", worst, 1e-13, worst <= 1e-13)


def check_scaling_limit_decay():
    em = LogShearEnd()
    prof = scaling.ScalingProfile(4.0, 6.0)
    lam = 0.25j
    y = np.linspace(0.0, 1.0, 7)
    devs = []
    for x in (10.0, 20.0, 40.0):
        dm = scaling.deformed_metric(em, prof, lam, np.full_like(y, x), y)
        limit = np.zeros_like(dm.ginv)
        limit[..., 0, 0] = (1.0 + lam) ** (-2.0)
        limit[..., 1, 1] = 1.0
        devs.append(float(np.max(np.abs(dm.ginv - limit))))
    ok = devs[1] <= devs[0] * 1.01 and devs[2] <= devs[1] * 1.01
    return _check("scaling_limit_decay", devs, "monotone within 1%", ok)


def check_scaling_slope_sector(seed=3):
    rng = np.random.default_rng(seed)
    prof = scaling.ScalingProfile(4.0, 6.0)
    alpha = np.pi / 6
    lam = 0.99 * np.sin(alpha) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    x = np.linspace(0.0, 12.0, 500)
    args = np.abs(np.angle(1.0 + lam * prof.dv(x)))
    worst = float(args.max())
    return _check("scaling_slope_sector", worst, alpha, worst < alpha)


def check_assembly_structure():
    grid = assembly.Grid(9.0, 36, 8)
    prof = scaling.ScalingProfile(4.0, 6.0)
    measured = {}
    ok = True
    for em in (StraightEnd(), LogShearEnd()):
        lam = 0.2j
        op = assembly.assemble_deformed(grid, em, prof, lam)
        sym = max(float(abs(op.K - op.K.T).max()), float(abs(op.M - op.M.T).max()))
        opc = assembly.assemble_deformed(grid, em, prof, np.conj(lam))
        refl = max(float(abs(opc.K - op.K.conj()).max()) / float(abs(op.K).max()),
                   float(abs(opc.M - op.M.conj()).max()) / float(abs(op.M).max()))
        op0 = assembly.assemble_deformed(grid, em, prof, 0.0)
        realness = float(max(abs(op0.K.toarray().imag).max(),
                             abs(op0.M.toarray().imag).max()))
        measured[em.preset] = {"symmetry": sym, "reflection": refl,
                               "lambda0_imag": realness}
        ok &= sym == 0.0 and refl < 1e-14 and realness == 0.0
    return _check("assembly_structure", measured,
                  {"symmetry": 0.0, "reflection": 1e-14, "lambda0_imag": 0.0}, ok)


def check_assembly_rectangle_convergence():
    exact = np.pi**2 * (1.0 + 1.0 / 9.0)
    prof = scaling.ScalingProfile(0.4, 0.9)
    errs = []
    for nx, ny in ((32, 16), (64, 32)):
        op = assembly.assemble_deformed(assembly.Grid(3.0, nx, ny),
                                        StraightEnd(), prof, 0.0)
        res = eigensolve.eig_near(op.K, op.M, 5.0, 1)
        errs.append(abs(float(res.eigenvalues[0].real) - exact))
    ratio = errs[0] / errs[1]
    measured = {"errors": errs, "ratio": ratio, "rel_error": errs[0] / exact}
    return _check("assembly_rectangle_convergence", measured,
                  {"rel_error": 0.01, "ratio": 3.5},
                  errs[0] / exact < 0.01 and ratio >= 3.5)


def check_assembly_pencil_equivalence():
    grid = assembly.Grid(9.0, 24, 6)
    prof = scaling.ScalingProfile(4.0, 6.0)
    em = StraightEnd()
    a = assembly.assemble_deformed(grid, em, prof, 0.0)
    b = assembly.assemble_principal(grid, em, prof, 0.0)
    diff = max(float(abs(a.K - b.K).max()), float(abs(a.M - b.M).max()))
    return _check("assembly_pencil_equivalence", diff, 0.0, diff == 0.0)


def check_fiber_operator():
    cs = CrossSection()
    f0 = assembly.assemble_fiber(cs, 64, 0.0, 0.0)
    lowest = float(np.sort(f0.eigenvalues().real)[0])
    err = abs(lowest - np.pi**2) / np.pi**2
    f2 = assembly.assemble_fiber(cs, 64, 0.0, 2.0)
    shift_err = float(np.max(np.abs(np.sort(f2.eigenvalues().real)
                                    - np.sort(f0.eigenvalues().real) - 4.0)))
    fc = assembly.assemble_fiber(cs, 16, 0.3j, 1.0)
    expected = (1.0 + 0.3j) ** (-2.0)
    shift_c = float(np.max(np.abs(np.sort_complex(fc.eigenvalues())
                                  - np.sort_complex(assembly.assemble_fiber(
                                      cs, 16, 0.3j, 0.0).eigenvalues())
                                  - expected)))
    measured = {"lowest_rel_err": err, "real_shift_err": shift_err,
                "complex_shift_err": shift_c}
    return _check("fiber_operator", measured,
                  {"lowest_rel_err": 1e-3, "shift": 1e-9},
                  err < 1e-3 and shift_err < 1e-9 and shift_c < 1e-9)


def check_sector_bound(seed=4):
    grid = assembly.Grid(9.0, 48, 8)
    prof = scaling.ScalingProfile(4.0, 6.0)
    em = LogShearEnd()
    op = assembly.assemble_principal(grid, em, prof, 0.25j)
    worst = analysis.sector_check(op, 1000, em.alpha, seed=seed)
    op0 = assembly.assemble_principal(grid, em, prof, 0.0)
    worst0 = analysis.sector_check(op0, 200, em.alpha, seed=seed)
    bound = 2 * em.alpha + 0.1
    return _check("sector_bound", {"lam_025i": worst, "lam_0": worst0},
                  {"lam_025i": bound, "lam_0": 1e-9},
                  worst < bound and worst0 < 1e-9)


def check_eigensolve_consistency():
    grid = assembly.Grid(3.0, 24, 12)
    prof = scaling.ScalingProfile(0.4, 0.9)
    op = assembly.assemble_deformed(grid, StraightEnd(), prof, 0.0)
    full = eigensolve.eig_all(op.K, op.M)
    near = eigensolve.eig_near(op.K, op.M, -100.0, 3)
    gaps = [float(np.min(np.abs(full.eigenvalues - mu))) / (1 + abs(mu))
            for mu in near.eigenvalues]
    imag = float(np.max(np.abs(full.eigenvalues.imag)
                        / (1.0 + np.abs(full.eigenvalues.real))))
    resid = float(max(full.residuals.max(), near.residuals.max()))
    measured = {"subset_gap": max(gaps), "lambda0_imag": imag, "residual": resid}
    return _check("eigensolve_consistency", measured,
                  {"subset_gap": 1e-6, "lambda0_imag": 1e-9, "residual": 1e-8},
                  max(gaps) < 1e-6 and imag < 1e-9 and resid <= 1e-8)


def check_rays_and_classify():
    cs = CrossSection()
    r = analysis.essential_rays(cs, 0.3j, 3)
    angle_err = abs(r.angle - (-2 * np.arctan(0.3)))
    r0 = analysis.essential_rays(cs, 0.2, 3)
    mu_on = cs.threshold(1) + 4.0 * np.exp(1j * r.angle)
    rep = analysis.classify(np.array([mu_on, cs.threshold(1) - 1.0]), r)
    tags = [e.tag for e in rep.entries]
    ok = angle_err < 1e-14 and r0.angle == 0.0 and tags == ["ray", "discrete"]
    return _check("rays_and_classify", {"angle_err": angle_err, "tags": tags},
                  1e-14, ok)


def check_fiber_distance():
    cs = CrossSection()
    z1 = analysis.fiber_distance(cs, 0.3j, cs.threshold(1))
    # tau grid 0,1,...,8 contains tau=2 exactly, so the real-axis ray point
    # nu_1 + tau^2 is resolved to rounding rather than grid resolution
    z2 = analysis.fiber_distance(CrossSection(j_max=1), 0.0,
                                 cs.threshold(1) + 4.0, tau_max=8.0,
                                 tau_samples=9, J=1)
    off = analysis.fiber_distance(cs, 0.3j, 20.0)
    ok = z1 == 0.0 and z2 < 1e-12 and off > 1.0
    return _check("fiber_distance", {"threshold": z1, "real_axis": z2, "off": off},
                  {"threshold": 0.0, "real_axis": 1e-12}, ok)


def check_quasimode_decreasing():
    g = analysis.Grid1D(5 * 16.0, 4000)
    r4 = analysis.quasimode_ratio(g, 0.25j, 1, 4.0)
    r16 = analysis.quasimode_ratio(g, 0.25j, 1, 16.0)
    return _check("quasimode_decreasing", {"ell4": r4, "ell16": r16},
                  "ratio(16) < ratio(4)", r16 < r4)


def check_vectors_identity():
    grid = assembly.Grid(12.0, 48, 8)
    prof = scaling.ScalingProfile(4.0, 6.0)
    F = vectors.GaussianModeVector.single(1.0, 3.0)
    a = vectors.evaluate_scaled(F, prof, 0.0, grid)
    x, y = grid.interior_coords()
    b = F(x.astype(complex), y)
    ident = float(np.max(np.abs(a - b)))
    decay = float(np.max(np.abs(vectors.evaluate_scaled(F, prof, 0.3j, grid)
                                [x > 11.5])))
    return _check("vectors_identity", {"lambda0": ident, "tail": decay},
                  {"lambda0": 0.0, "tail": 1e-20}, ident == 0.0 and decay < 1e-20)


def check_mollifier_decay():
    prof = scaling.ScalingProfile(4.0, 6.0)
    h = vectors.SmoothBump(2.0, 8.0, ramp=2.0)
    g = analysis.Grid1D(12.0, 120)
    measured = {}
    ok = True
    for lam in (0.0, 0.3j):
        errs = [vectors.weierstrass_mollify(h, ell, prof, lam, g).l2_error
                for ell in (4.0, 16.0)]
        measured[str(lam)] = errs
        ok &= errs[1] < errs[0]
    return _check("mollifier_decay", measured, "decreasing", ok)


def check_h6_identity():
    grid = assembly.Grid(12.0, 96, 12)
    prof = scaling.ScalingProfile(4.0, 6.0)
    F = vectors.GaussianModeVector.single(1.0, 3.0)
    e0 = vectors.resolvent_element(grid, StraightEnd(), prof, 0.0, -1.0, F, F)
    e2 = vectors.resolvent_element(grid, StraightEnd(), prof, 0.2, -1.0, F, F)
    gap = abs(e2 - e0) / abs(e0)
    return _check("h6_real_lambda", gap, 1e-4, gap < 1e-4)


def check_determinism(run_twice) -> dict:
    """Byte-identical outputs for two runs of the same command."""
    digests = []
    for _ in range(2):
        files = run_twice()
        h = hashlib.sha256()
        for path in sorted(str(p) for p in files):
            with open(path, "rb") as fh:
                h.update(fh.read())
        digests.append(h.hexdigest())
    ok = digests[0] == digests[1]
    return _check("determinism", digests, "identical digests", ok)


ALL_CHECKS = [
    check_geometry_analyticity,
    check_geometry_reflection,
    check_geometry_stabilization_decay,
    check_scaling_profile,
    check_scaling_lambda_analyticity,
    check_scaling_reflection,
    check_scaling_limit_decay,
    check_scaling_slope_sector,
    check_assembly_structure,
    check_assembly_rectangle_convergence,
    check_assembly_pencil_equivalence,
    check_fiber_operator,
    check_sector_bound,
    check_eigensolve_consistency,
    check_rays_and_classify,
    check_fiber_distance,
    check_quasimode_decreasing,
    check_vectors_identity,
    check_mollifier_decay,
    check_h6_identity,
]


def run_checks(checks=None) -> list:
    results = []
    for fn in (checks or ALL_CHECKS):
        try:
            results.append(fn())
        except Exception as exc:  # a crashed check is a failed check
            results.append(_check(fn.__name__, f"exception: {exc}", None, False))
    return results
