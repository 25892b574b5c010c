"""Trackability analysis and oscillatory tracking for invariant mechanical systems on Lie groups."""

from .closure import AnalysisReport, FieldFamily, analyze_z, is_kinematic_reduction, lie_closure, sym1, z_family
from .cones import PolyCone, analyze_k, cone_member, k_cone
from .curves import ReferenceCurve, builtin_curve, load_curve
from .dynamics import ControlSignal, GroupState, Trajectory, integrate, kirchhoff_rhs, se3_distance
from .liealg import LieAlgebra, ad_star, bracket, heisenberg, se3
from .mech import InertiaTensor, MechSystem, submarine, symmetric_product
from .specfile import load_spec
from .tracking import TrackResult, frequency_sweep, kinematic_synthesis, mechanical_synthesis, track

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "FieldFamily", "analyze_z", "is_kinematic_reduction", "lie_closure", "sym1", "z_family",
    "PolyCone", "analyze_k", "cone_member", "k_cone",
    "ReferenceCurve", "builtin_curve", "load_curve",
    "ControlSignal", "GroupState", "Trajectory", "integrate", "kirchhoff_rhs", "se3_distance",
    "LieAlgebra", "ad_star", "bracket", "heisenberg", "se3",
    "InertiaTensor", "MechSystem", "submarine", "symmetric_product",
    "load_spec",
    "TrackResult", "frequency_sweep", "kinematic_synthesis", "mechanical_synthesis", "track",
]
