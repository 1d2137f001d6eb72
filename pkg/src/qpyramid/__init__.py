"""Measurements and accessible information for quantum pyramid signal states."""
from .geometry import DomainError, PyramidParams, make_pyramid, pyramid_from_nr0
from .measurement import Pom, Scheme, SchemeSpec, ims, mud, srm, unified_pom, validate_pom
from .information import ims_info, joint_probabilities, mutual_information, srm_info, unified_info
from .optimizer import AscentConfig, optimize_t_obtuse, steepest_ascent_ims, sweep, threshold_nr0

__all__ = [
    "AscentConfig", "DomainError", "Pom", "PyramidParams", "Scheme", "SchemeSpec",
    "ims", "ims_info", "joint_probabilities", "make_pyramid", "mud", "mutual_information",
    "optimize_t_obtuse", "pyramid_from_nr0", "srm", "srm_info", "steepest_ascent_ims",
    "sweep", "threshold_nr0", "unified_info", "unified_pom", "validate_pom",
]
__version__ = "0.1.0"
