"""Numerical laboratory for complex scaling of Dirichlet waveguides.

The package assembles the complex-scaled Laplacian of a 2D waveguide
with an asymptotically cylindrical end, computes and classifies its
spectrum (essential rays, discrete eigenvalues, resonances), and
evaluates/continues resolvent matrix elements over a Gaussian family of
partial analytic vectors.
"""

from .geometry import (CrossSection, EndMap, LogShearEnd, MetricSample,
                       ProfileProductEnd, SectorError, StraightEnd, end_map,
                       evaluate_map, jacobian, metric_g, stabilization_bound)
from .scaling import (DeformedMetric, DegenerateMetricError, ScalingDomainError,
                      ScalingParameter, ScalingProfile, build_profile,
                      check_scaling_parameter, curve_point, deformed_metric,
                      deviation_norm)
from .assembly import (FiberOperator, Grid, ScaledOperator,
                       ShiftAtSpectrumError, assemble_deformed,
                       assemble_fiber, assemble_principal, pairing_lambda,
                       solve_shifted)
from .eigensolve import EigenAccuracyError, EigenResult, eig_all, eig_near
from .analysis import (Grid1D, RayFamily, SpectrumEntry, SpectrumReport,
                       best_fit_ray_angle, classify, detect_resonances,
                       essential_rays, fiber_distance, quasimode_ratio,
                       sector_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
