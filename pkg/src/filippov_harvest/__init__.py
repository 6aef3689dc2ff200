"""Planar predator-prey system with prey refuge and threshold-triggered
harvesting: hybrid simulation, equilibrium classification, sliding-mode
analysis, and bifurcation scans."""

__version__ = "0.1.0"

from .model import (ModelParams, PRESETS, PsiMode, State, Velocity, eval_field,
                    field_jacobian, switching_value)
from .records import (EquilibriumKind, EquilibriumRecord, Placement, Stability,
                      TangentPointRecord, Visibility)
from .sliding import (ManifoldRegime, SlidingBounds, classify_manifold_point,
                      filippov_lambda, pseudo_equilibrium, pseudo_equilibrium_y,
                      pseudo_stability, sigma_pair, sliding_bounds, sliding_flow,
                      sliding_flow_derivative)
from .equilibria import (CubicCoeffs, boundary_equilibria, classify_equilibrium,
                         cubic_coefficients, descartes_certified, equilibrium_y,
                         global_stability_condition, interior_equilibria, jacobian,
                         local_stability_condition, semi_trivial_equilibria,
                         solve_cubic, tangent_points)
from .integrate import (Regime, Segment, SegmentEvent, SimOptions, Trajectory,
                        boundedness_limits, check_boundedness, default_attractors,
                        detect_attractor, lyapunov_value, simulate)
from .scan import (AxisSpec, BoundaryBifurcation, GridResult, RegionCode,
                   both_exist_area_fraction, compute_basins, equilibrium_curve,
                   existence_boundary_p, locate_boundary_bifurcations,
                   scan_m_sweep, scan_sp_plane)
from .errors import (AmbiguousAttractorError, ConfigError, NumericsError,
                     ParameterError)

__all__ = [
    "AmbiguousAttractorError", "AxisSpec", "BoundaryBifurcation", "ConfigError",
    "CubicCoeffs", "EquilibriumKind", "EquilibriumRecord", "GridResult",
    "ManifoldRegime", "ModelParams", "NumericsError", "PRESETS", "ParameterError",
    "Placement", "PsiMode", "Regime", "RegionCode", "Segment", "SegmentEvent",
    "SimOptions", "SlidingBounds", "Stability", "State", "TangentPointRecord",
    "Trajectory", "Velocity", "Visibility", "boundary_equilibria",
    "boundedness_limits", "both_exist_area_fraction", "check_boundedness",
    "classify_equilibrium", "classify_manifold_point", "compute_basins",
    "cubic_coefficients", "default_attractors", "descartes_certified",
    "detect_attractor", "equilibrium_curve", "equilibrium_y", "eval_field",
    "existence_boundary_p", "field_jacobian", "filippov_lambda",
    "global_stability_condition", "interior_equilibria", "jacobian",
    "local_stability_condition", "locate_boundary_bifurcations", "lyapunov_value",
    "pseudo_equilibrium", "pseudo_equilibrium_y", "pseudo_stability",
    "scan_m_sweep", "scan_sp_plane", "semi_trivial_equilibria", "sigma_pair",
    "simulate", "sliding_bounds", "sliding_flow", "sliding_flow_derivative",
    "solve_cubic", "switching_value", "tangent_points",
]
