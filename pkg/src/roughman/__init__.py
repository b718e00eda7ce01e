"""Rough paths, rough differential equations and invariant submanifolds."""

from .controlled import ControlledPath, ito_formula_residual, rough_integral
from .linalg import apply_bilinear, pinv_apply, sym
from .manifold import Chart, Verdict, check_invariance, corrected_drift, distance_monitor, tangency_residual
from .rde import (RDESolution, VectorFieldSet, chart_reduce, concatenate, decomposition_residual,
                  reduced_vs_ambient, solve)
from .roughpath import (BracketPath, RoughPath, bracket, chen_reconstruct, coarsen, holder_seminorm,
                        is_weakly_geometric, true_roughness_diagnostic)
from .signals import QSpec, SignalConfig, geometric_fbm_lift, ito_wiener_lift, pure_area_path, smooth_lift

__version__ = "0.1.0"
