"""Eigenvalues, eigenfunctions and Green's functions of rectangular rooms
with complex surface-admittance walls."""

from rectroom.core import (
    Admittance,
    AxisBoundary,
    GammaPair,
    RoomSpec,
    SolverParams,
    WaveContext,
    make_gamma,
    make_wave_context,
)
from rectroom.errors import (
    ContourOnRoot,
    CountMismatch,
    NearResonance,
    RectRoomError,
    SolveFailure,
)

__all__ = [
    "Admittance",
    "AxisBoundary",
    "ContourOnRoot",
    "CountMismatch",
    "GammaPair",
    "NearResonance",
    "RectRoomError",
    "RoomSpec",
    "SolveFailure",
    "SolverParams",
    "WaveContext",
    "make_gamma",
    "make_wave_context",
]

__version__ = "0.1.0"
