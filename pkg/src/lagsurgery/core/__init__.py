"""Measurement instruments: symplectic algebra, Maslov index, curves, double points."""

from .curves import (
    PlanarCurve,
    concat_paths,
    crossing_count,
    crossing_points,
    enclosed_area,
    hausdorff,
    winding_number,
)
from .intersect import DoublePoint, DoublePointSearch, find_double_points
from .maslov import (
    FrameLoop,
    LagrangianFrame,
    det_squared_phases,
    direct_sum,
    line_frame,
    maslov_index,
    maslov_winding,
    plane_winding,
    principal_gap,
    transversality_gap,
)
from .symplectic import (
    LagrangianPatch,
    PhasePoint,
    SymplecticForm,
    VerificationReport,
    finite_difference_jacobian,
    graph_patch,
    omega_eval,
    symplectic_matrix,
    verify_lagrangian,
)

__all__ = [
    "DoublePoint",
    "DoublePointSearch",
    "FrameLoop",
    "LagrangianFrame",
    "LagrangianPatch",
    "PhasePoint",
    "PlanarCurve",
    "SymplecticForm",
    "VerificationReport",
    "concat_paths",
    "crossing_count",
    "crossing_points",
    "det_squared_phases",
    "direct_sum",
    "enclosed_area",
    "find_double_points",
    "finite_difference_jacobian",
    "graph_patch",
    "hausdorff",
    "line_frame",
    "maslov_index",
    "maslov_winding",
    "omega_eval",
    "plane_winding",
    "principal_gap",
    "symplectic_matrix",
    "transversality_gap",
    "verify_lagrangian",
    "winding_number",
]
