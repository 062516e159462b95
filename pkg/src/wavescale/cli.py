"""Command-line interface: portrait, resonances, resolvent, validate.

Each subcommand reads one JSON config, writes its result files into the
output directory and returns a process exit code.  Outputs are
deterministic for a fixed config + seed (see outputs module).
"""

from __future__ import annotations

import argparse
import pathlib
import sys

import numpy as np

from . import __version__
from .analysis import classify, detect_resonances, essential_rays
from .assembly import assemble_deformed
from .config import ConfigError, RunConfig, load_config
from .eigensolve import eig_all, eig_near
from .outputs import write_csv, write_json, write_portrait_svg
from .validate import check_determinism, run_checks
from .vectors import GaussianModeVector, continuation_scan


def _default_shifts(cfg: RunConfig, lam: complex):
    """A below-threshold shift plus a mid-window shift on the first ray."""
    nu1 = cfg.cs.threshold(1)
    nu2 = cfg.cs.threshold(2)
    angle = -2.0 * np.angle(1.0 + lam)
    t = ((nu1 + nu2) / 2.0 - nu1) / np.cos(angle)
    return [0.5 * nu1 + 0j, nu1 + t * np.exp(1j * angle)]


def _portrait_eigenvalues(cfg: RunConfig, lam: complex, op):
    block = cfg.portrait
    if block["mode"] == "all":
        res = eig_all(op.K, op.M, tol=cfg.eig_tol)
        return res.eigenvalues, res.residuals, res.converged
    shifts = block["shifts"] or _default_shifts(cfg, lam)
    vals, resid = [], []
    converged = True
    for shift in shifts:
        res = eig_near(op.K, op.M, shift, block["k"], tol=cfg.eig_tol)
        vals.extend(res.eigenvalues.tolist())
        resid.extend(res.residuals.tolist())
        converged &= res.converged
    vals = np.asarray(vals, dtype=complex)
    resid = np.asarray(resid)
    order = np.lexsort((vals.imag, vals.real))
    vals, resid = vals[order], resid[order]
    keep = np.ones(len(vals), dtype=bool)
    for i in range(1, len(vals)):
        if abs(vals[i] - vals[i - 1]) <= 1e-8 * (1.0 + abs(vals[i])):
            keep[i] = False
    return vals[keep], resid[keep], converged


def cmd_portrait(cfg: RunConfig, out: pathlib.Path, dump_matrices=False) -> int:
    lam = cfg.lambdas[0]
    rays = essential_rays(cfg.cs, lam, cfg.J)
    op = assemble_deformed(cfg.grid, cfg.em, cfg.profile, lam)
    eigs, residuals, converged = _portrait_eigenvalues(cfg, lam, op)
    report = classify(eigs, rays, cfg.angular_tol, cfg.radial_margin)

    rows = []
    for entry, res in zip(report.entries, residuals):
        rows.append([entry.mu.real, entry.mu.imag, entry.tag,
                     str(entry.ray_index if entry.ray_index is not None else ""),
                     res])
    write_csv(out / "spectrum.csv", ["re", "im", "tag", "ray_index", "residual"],
              rows)
    write_json(out / "spectrum.json", {
        "schema": "wavescale-spectrum/1",
        "config": cfg.raw,
        "lambda": [lam.real, lam.imag],
        "converged": converged,
        "report": report.to_dict(),
        "residual_max": float(np.max(residuals)) if len(residuals) else 0.0,
    })
    write_portrait_svg(out / "portrait.svg", rays, eigs,
                       metadata={"seed": cfg.seed})
    if dump_matrices:
        op.dump_matrix_market(out, "pencil_lambda0")
    return 0


def cmd_resonances(cfg: RunConfig, out: pathlib.Path, dump_matrices=False) -> int:
    block = cfg.resonances
    shifts = block["shifts"]
    if shifts is None:
        shifts = _default_shifts(cfg, cfg.lambdas[0])
    report = detect_resonances(
        cfg.cs, cfg.em, cfg.grid, cfg.lambdas, block["profiles"], shifts,
        k=block["k"], stability_tol=cfg.stability_tol, real_tol=cfg.real_tol,
        ray_margin=cfg.ray_margin, angular_tol=cfg.angular_tol,
        radial_margin=cfg.radial_margin, match_radius=cfg.match_radius,
        refine=block["refine"], J=cfg.J, tol=cfg.eig_tol)
    rows = []
    for e in report.entries:
        s = e.stability or {}
        rows.append([e.mu.real, e.mu.imag, e.tag,
                     s.get("drift_coarse", np.inf), s.get("drift_fine", np.inf),
                     s.get("ray_distance", np.nan)])
    write_csv(out / "report.csv",
              ["re", "im", "tag", "drift_coarse", "drift_fine", "ray_distance"],
              rows)
    write_json(out / "report.json", {
        "schema": "wavescale-resonances/1",
        "config": cfg.raw,
        "report": report.to_dict(),
        "counts": {tag: len(report.tagged(tag))
                   for tag in ("resonance", "discrete", "unresolved")},
    })
    return 0


def cmd_resolvent(cfg: RunConfig, out: pathlib.Path, dump_matrices=False) -> int:
    block = cfg.resolvent
    if block["mu_start"] is None or block["mu_stop"] is None:
        nu1, nu2 = cfg.cs.threshold(1), cfg.cs.threshold(2)
        mid = 0.5 * (nu1 + nu2)
        start, stop = mid + 0.5j, mid - 0.5j
    else:
        start, stop = block["mu_start"], block["mu_stop"]
    path = np.linspace(0.0, 1.0, block["samples"]) * (stop - start) + start
    F = block["F"] or GaussianModeVector.single(1.0, 3.0)
    G = block["G"] or F
    result = continuation_scan(cfg.grid, cfg.em, cfg.profile, cfg.lambdas,
                               path, F, G, cfg.cs,
                               min_ray_distance=block["min_ray_distance"],
                               J=cfg.J)
    rows = []
    for trace in result.traces:
        for mu, val, res in zip(trace.mu, trace.values, trace.residuals):
            rows.append([mu.real, mu.imag, val.real, val.imag, res])
    write_csv(out / "trace.csv", ["mu_re", "mu_im", "val_re", "val_im", "residual"],
              rows)
    write_json(out / "trace.json", {
        "schema": "wavescale-resolvent/1",
        "config": cfg.raw,
        "agreement": result.agreement,
        "traces": [{
            "lambda": [t.lam.real, t.lam.imag],
            "samples": [{"mu": [m.real, m.imag], "value": [v.real, v.imag],
                         "residual": r}
                        for m, v, r in zip(t.mu, t.values, t.residuals)],
        } for t in result.traces],
    })
    return 0


def cmd_validate(cfg: RunConfig, out: pathlib.Path, dump_matrices=False) -> int:
    results = run_checks()

    def rerun():
        sub = out / "_determinism"
        sub.mkdir(parents=True, exist_ok=True)
        cmd_portrait(cfg, sub)
        return [sub / "spectrum.json", sub / "spectrum.csv", sub / "portrait.svg"]

    results.append(check_determinism(rerun))
    passed = all(r["passed"] for r in results)
    write_json(out / "validation.json", {
        "schema": "wavescale-validation/1",
        "config": cfg.raw,
        "passed": passed,
        "checks": results,
    })
    for r in results:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['name']}")
    return 0 if passed else 1


_COMMANDS = {
    "portrait": cmd_portrait,
    "resonances": cmd_resonances,
    "resolvent": cmd_resolvent,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavescale",
        description="Complex-scaling spectral laboratory for Dirichlet "
                    "waveguides with asymptotically cylindrical ends")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("portrait", "spectral portrait: rays, thresholds, eigenvalues"),
            ("resonances", "cross-variant resonance detection"),
            ("resolvent", "resolvent matrix-element continuation scan"),
            ("validate", "run the invariant suite and aggregate pass/fail")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--dump-matrices", action="store_true",
                       help="export assembled pencils in Matrix Market format")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw = dict(cfg.raw, seed=args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg, out, dump_matrices=args.dump_matrices)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
