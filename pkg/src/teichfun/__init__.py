"""Scaling-function coordinates for closed hyperbolic surfaces via Bowen-Series Markov maps."""
from .bowen_series import MarkovSystem, build_standard_system, conjugated_system
from .fuchsian import (
    Marking, SurfaceGroupRep, build_standard_group, conjugate_rep, evaluate_word, twist_deform,
)
from .mobius import DiskMobius
from .scaling import d_max_estimate, distortion_constants, prescaling, scaling_estimate, scaling_table
from .thermo import check_zero_pressure, gibbs, pressure, pressure_metric

__version__ = "0.1.0"
