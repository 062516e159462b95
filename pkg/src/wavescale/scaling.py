"""Scaling profile and the deformed metric of the complex-scaled guide.

The axial deformation is x -> x + lambda*v(x).  The profile v vanishes
up to an onset radius R, ramps smoothly, and has unit slope beyond a
saturation radius R_tilde, so the deformation acts only far out on the
end.  For complex lambda inside the disc |lambda| < sin(alpha) the curve
x + lambda*v(x) stays inside the end-map's analyticity sector, and the
pulled-back metric

    g_lambda(x, y) = diag{1 + lambda*v'(x), 1}
                     . g(x + lambda*v(x), y)
                     . diag{1 + lambda*v'(x), 1}

is complex symmetric with entries analytic in lambda.

The ramp of v' is the classic C-infinity bump-integral smoothstep, which
makes v exactly flat/linear outside [R, R_tilde] (not merely to rounding)
while keeping 0 <= v' <= 1 and smoothness at the seams.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import EndMap, max_entry_norm

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class ScalingDomainError(ValueError):
    """Scaling parameter lies outside the admissible disc |lambda| < sin(alpha)."""


class DegenerateMetricError(ArithmeticError):
    """Deformed metric lost invertibility at a sample point."""


def check_scaling_parameter(lam: complex, alpha: float) -> complex:
    lam = complex(lam)
    if abs(lam) >= np.sin(alpha):
        raise ScalingDomainError(
            f"lambda={lam} outside the scaling disc |lambda| < sin(alpha) = "
            f"{np.sin(alpha):.6g}"
        )
    return lam


def _bump_step(t):
    """Smoothstep S with S=0 for t<=0, S=1 for t>=1, C-infinity throughout."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class ScalingProfile:
    """Axial scaling profile v with onset R and saturation R_tilde."""

    R: float
    R_tilde: float

    def __post_init__(self):
        if not 0 < self.R < self.R_tilde:
            raise ValueError(
                f"profile needs 0 < R < R_tilde, got R={self.R}, R_tilde={self.R_tilde}"
            )

    def dv(self, x):
        """Slope v'(x): 0 below R, 1 above R_tilde, monotone smoothstep between."""
        x = np.asarray(x, dtype=float)
        return _bump_step((x - self.R) / (self.R_tilde - self.R))

    @cached_property
    def _ramp_total(self) -> float:
        return float(self._ramp_integral(np.asarray(self.R_tilde)))

    def _ramp_integral(self, x):
        # Gauss-Legendre over [R, x]; v' is smooth so 32 points are exact
        # to rounding for ramps of moderate length.
        half = 0.5 * (x - self.R)
        nodes = self.R + half[..., None] * (_GL_NODES + 1.0)
        return half * np.sum(_GL_WEIGHTS * self.dv(nodes), axis=-1)

    def v(self, x):
        """Displacement v(x) = integral of v' from R."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        tail = x >= self.R_tilde
        out[tail] = self._ramp_total + (x[tail] - self.R_tilde)
        ramp = (x > self.R) & ~tail
        out[ramp] = self._ramp_integral(x[ramp])
        return out[0] if scalar else out


def build_profile(R: float, R_tilde: float) -> ScalingProfile:
    """Construct a scaling profile (argument order mirrors the config)."""
    return ScalingProfile(R=float(R), R_tilde=float(R_tilde))


@dataclass(frozen=True)
class ScalingParameter:
    """Scaling parameter lambda together with its admissible disc radius."""

    lam: complex
    alpha: float

    def __post_init__(self):
        check_scaling_parameter(self.lam, self.alpha)

    @property
    def disc_radius(self) -> float:
        return float(np.sin(self.alpha))


def curve_point(profile: ScalingProfile, lam: complex, x, alpha: float):
    """Point x + lambda*v(x) on the deformed axial curve."""
    lam = check_scaling_parameter(lam, alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("axial coordinate must be nonnegative")
    return x + lam * profile.v(x)


@dataclass(frozen=True)
class DeformedMetric:
    """Deformed metric samples: matrix, inverse, determinant and weight.

    All arrays share leading shape equal to the broadcast of (x, y); the
    matrix entries sit in the trailing (2, 2) axes.  sqrt_det is the
    analytic branch of sqrt(det g_lambda) that is positive at lambda=0,
    computed as (1 + lambda*v') * det(kappa') to avoid square-root cuts.
    """

    g: np.ndarray
    ginv: np.ndarray
    det: np.ndarray
    sqrt_det: np.ndarray
    lam: complex


def deformed_metric(em: EndMap, profile: ScalingProfile, lam: complex,
                    x, y) -> DeformedMetric:
    """Evaluate g_lambda and companions at semicylinder points (x, y)."""
    lam = check_scaling_parameter(lam, em.alpha)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = x + lam * profile.v(x)
    ram = 1.0 + lam * profile.dv(x)  # axial Jacobian factor of the scaling

    g = em.metric(z, y)
    x_b, y_b, ram_b = np.broadcast_arrays(x, y, ram)

    gl = np.empty(np.broadcast_shapes(g.shape[:-2], ram_b.shape) + (2, 2),
                  dtype=complex)
    gl[..., 0, 0] = ram_b * ram_b * g[..., 0, 0]
    gl[..., 0, 1] = ram_b * g[..., 0, 1]
    gl[..., 1, 0] = ram_b * g[..., 1, 0]
    gl[..., 1, 1] = g[..., 1, 1]

    det = gl[..., 0, 0] * gl[..., 1, 1] - gl[..., 0, 1] * gl[..., 1, 0]
    bad = np.abs(det) < 1e-12
    if np.any(bad):
        i = np.argwhere(bad)[0]
        raise DegenerateMetricError(
            "deformed metric degenerate (|det g_lambda| < 1e-12) at "
            f"x={x_b[tuple(i)]:.6g}, y={y_b[tuple(i)]:.6g}, lambda={lam}"
        )

    ginv = np.empty_like(gl)
    ginv[..., 0, 0] = gl[..., 1, 1] / det
    ginv[..., 1, 1] = gl[..., 0, 0] / det
    ginv[..., 0, 1] = -gl[..., 0, 1] / det
    ginv[..., 1, 0] = -gl[..., 1, 0] / det

    sqrt_det = ram_b * em.jacobian_det(z, y)
    return DeformedMetric(g=gl, ginv=ginv, det=det, sqrt_det=sqrt_det, lam=lam)


def deviation_norm(em: EndMap, profile: ScalingProfile, lam: complex, x, y):
    """Max-entry distance of g_lambda^-1 from diag{(1+lambda*v')^-2, 1}."""
    dm = deformed_metric(em, profile, lam, x, y)
    ram = 1.0 + lam * profile.dv(np.asarray(x, dtype=float))
    limit = np.zeros_like(dm.ginv)
    limit[..., 0, 0] = ram ** (-2.0)
    limit[..., 1, 1] = 1.0
    return max_entry_norm(dm.ginv - limit)
