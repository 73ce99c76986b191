"""Numerical laboratory for the large-spin ferromagnetic XXZ kink chain."""
from .kinkmath import KinkProfile, ModelParams, kink_profile, make_params

__all__ = ["KinkProfile", "ModelParams", "kink_profile", "make_params"]
__version__ = "0.1.0"
