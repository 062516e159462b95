"""Deterministic result writers: JSON, CSV and the SVG spectral portrait.

Determinism contract: identical config + seed produce byte-identical
JSON and CSV.  JSON is dumped with sorted keys; CSV numbers carry 17
significant digits with '.' decimal separator and no locale influence.
The portrait SVG is hand-emitted (no plotting dependency): thresholds as
dots, essential-spectrum rays as lines clipped to the viewport, and
eigenvalues as crosses, plus a machine-readable metadata block.
"""

from __future__ import annotations

import json
import pathlib

import numpy as np


def fmt(x) -> str:
    """17-significant-digit decimal representation (round-trips doubles)."""
    return format(float(x), ".17g")


def write_json(path, obj) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return path


def write_csv(path, header, rows) -> pathlib.Path:
    """Write rows of numbers/strings; numbers formatted via fmt()."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = [cell if isinstance(cell, str) else fmt(cell) for cell in row]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _clip_ray(base, angle, window):
    """Clip the ray base + t*e^(i*angle), t >= 0, to the window rectangle.

    Returns (start, end) in complex mu coordinates, or None when the ray
    misses the window entirely.
    """
    re0, re1, im0, im1 = window
    dx, dy = np.cos(angle), np.sin(angle)
    ts = [0.0, np.inf]
    for start, d, lo, hi in ((base.real, dx, re0, re1), (base.imag, dy, im0, im1)):
        if abs(d) < 1e-15:
            if not lo <= start <= hi:
                return None
            continue
        t_lo, t_hi = (lo - start) / d, (hi - start) / d
        if t_lo > t_hi:
            t_lo, t_hi = t_hi, t_lo
        ts = [max(ts[0], t_lo), min(ts[1], t_hi)]
    if ts[0] > ts[1] or ts[1] < 0:
        return None
    t0 = max(ts[0], 0.0)
    p0 = base + t0 * np.exp(1j * angle)
    p1 = base + ts[1] * np.exp(1j * angle)
    return p0, p1


def write_portrait_svg(path, rays, eigenvalues, window=None,
                       size=(900, 560), metadata=None) -> pathlib.Path:
    """Spectral portrait: threshold dots, ray lines, eigenvalue crosses."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    if window is None:
        res = np.concatenate([eigenvalues.real, rays.thresholds])
        ims = np.concatenate([eigenvalues.imag, [0.0]])
        pad_re = 0.05 * (res.max() - res.min() + 1.0)
        pad_im = 0.05 * (ims.max() - ims.min() + 1.0)
        window = (res.min() - pad_re, res.max() + pad_re,
                  ims.min() - pad_im, ims.max() + pad_im)
    re0, re1, im0, im1 = (float(w) for w in window)
    W, H = size

    def px(mu):
        return ((mu.real - re0) / (re1 - re0) * W,
                (im1 - mu.imag) / (im1 - im0) * H)

    def f(v):
        return format(v, ".3f")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
    ]
    meta = dict(metadata or {})
    meta.setdefault("ray_angle", rays.angle)
    meta.setdefault("thresholds", [float(t) for t in rays.thresholds])
    meta.setdefault("lambda", [rays.lam.real, rays.lam.imag])
    meta.setdefault("window", [re0, re1, im0, im1])
    parts.append("<metadata id=\"portrait\">"
                 + json.dumps(meta, sort_keys=True) + "</metadata>")
    parts.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')

    # real/imag axes when visible
    if im0 < 0 < im1:
        x0, y = px(complex(re0, 0.0))
        x1, _ = px(complex(re1, 0.0))
        parts.append(f'<line x1="{f(x0)}" y1="{f(y)}" x2="{f(x1)}" y2="{f(y)}" '
                     'stroke="#bbbbbb" stroke-width="1" stroke-dasharray="4 3"/>')
    if re0 < 0 < re1:
        x, y0 = px(complex(0.0, im0))
        _, y1 = px(complex(0.0, im1))
        parts.append(f'<line x1="{f(x)}" y1="{f(y0)}" x2="{f(x)}" y2="{f(y1)}" '
                     'stroke="#bbbbbb" stroke-width="1" stroke-dasharray="4 3"/>')

    for base in rays.thresholds:
        seg = _clip_ray(complex(base, 0.0), rays.angle, (re0, re1, im0, im1))
        if seg is not None:
            (xa, ya), (xb, yb) = px(seg[0]), px(seg[1])
            parts.append(f'<line x1="{f(xa)}" y1="{f(ya)}" x2="{f(xb)}" y2="{f(yb)}" '
                         'stroke="#1f77b4" stroke-width="1.5"/>')
        if re0 <= base <= re1 and im0 <= 0.0 <= im1:
            x, y = px(complex(base, 0.0))
            parts.append(f'<circle cx="{f(x)}" cy="{f(y)}" r="4" fill="#111111"/>')

    d = 4.0
    for mu in eigenvalues:
        if not (re0 <= mu.real <= re1 and im0 <= mu.imag <= im1):
            continue
        x, y = px(mu)
        parts.append(f'<path d="M {f(x - d)} {f(y - d)} L {f(x + d)} {f(y + d)} '
                     f'M {f(x - d)} {f(y + d)} L {f(x + d)} {f(y - d)}" '
                     'stroke="#d62728" stroke-width="1.5" fill="none"/>')
    parts.append("</svg>")

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def read_portrait_metadata(path) -> dict:
    """Parse the metadata JSON block back out of a portrait SVG."""
    text = pathlib.Path(path).read_text(encoding="utf-8")
    start = text.index('<metadata id="portrait">') + len('<metadata id="portrait">')
    end = text.index("</metadata>", start)
    return json.loads(text[start:end])
