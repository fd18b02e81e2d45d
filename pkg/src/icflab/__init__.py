"""Numerical laboratory for inverse curvature flows of star-shaped
hypersurfaces given as radial graphs over the unit sphere."""

__version__ = "0.1.0"

from .sphere_grid import GridSpec, ScalarField, CovariantTensor2, make_grid
from .radial_graph import (StarShapedHypersurface, GeometryBundle, geometry,
                           area, sigma_integral, invert,
                           inversion_mean_curvature_check)
from .conformal import (ConformalKillingField, AffineField, killing_residual,
                        flow_map, pushforward_surface)
from .invariants import (EnergyReport, e_tensor, willmore, willmore_rate,
                         guan_li_q, hsiung_minkowski_residual, qk_rate,
                         condition_v_residual, center_of_mass, qbar,
                         energy_report)
from .flow import (SpeedFunction, FlowConfig, FlowTrace, normal_speed, step,
                   run, asymptotics_check, class_c_audit)
from .soliton import SolitonReport, residual, best_fit_ckf, classify
from .surfaces import sphere_surface, spheroid_surface, harmonic_surface

__all__ = [
    "GridSpec", "ScalarField", "CovariantTensor2", "make_grid",
    "StarShapedHypersurface", "GeometryBundle", "geometry", "area",
    "sigma_integral", "invert", "inversion_mean_curvature_check",
    "ConformalKillingField", "AffineField", "killing_residual", "flow_map",
    "pushforward_surface",
    "EnergyReport", "e_tensor", "willmore", "willmore_rate", "guan_li_q",
    "hsiung_minkowski_residual", "qk_rate", "condition_v_residual",
    "center_of_mass", "qbar", "energy_report",
    "SpeedFunction", "FlowConfig", "FlowTrace", "normal_speed", "step",
    "run", "asymptotics_check", "class_c_audit",
    "SolitonReport", "residual", "best_fit_ckf", "classify",
    "sphere_surface", "spheroid_surface", "harmonic_surface",
]
