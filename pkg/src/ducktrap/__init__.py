"""Hybrid simulation and analysis of planar fast-slow systems whose critical
manifold is the two-dimensional region C0 = {y >= x^2}."""

from .core import (GFamily, Params, PlanePoint, SystemKind, SystemSpec, canard_spec,
                   eval_rhs, equilibrium_point, fold_spec, paper_fig_family,
                   relative_position, switching_value)
from .integrate import (EventKind, HybridTrajectory, Regime, Section, StopPolicy,
                        detect_trapping, integrate, transition_map_fold)

__version__ = "0.1.0"

__all__ = [
    "GFamily", "Params", "PlanePoint", "SystemKind", "SystemSpec", "canard_spec", "eval_rhs",
    "equilibrium_point", "fold_spec", "paper_fig_family", "relative_position", "switching_value",
    "EventKind", "HybridTrajectory", "Regime", "Section", "StopPolicy", "detect_trapping",
    "integrate", "transition_map_fold",
]
