"""Numerical toolkit for generalized g-frame multipliers."""

from gmult.gframe import FrameBounds, GFrame, canonical_dual, frame_bounds, random_gframe
from gmult.multiplier import MultiplierReport, assemble
from gmult.opspace import SpaceLayout, Tolerances, get_tolerances, use_tolerances
from gmult.symbol import Symbol

__all__ = [
    "FrameBounds",
    "GFrame",
    "MultiplierReport",
    "SpaceLayout",
    "Symbol",
    "Tolerances",
    "assemble",
    "canonical_dual",
    "frame_bounds",
    "get_tolerances",
    "random_gframe",
    "use_tolerances",
]

__version__ = "0.1.0"
