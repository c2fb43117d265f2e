"""Quantum codes from regular triangle tessellations of the sphere, the
Euclidean plane and the hyperbolic plane."""

from .codespec import CodeSpec, SpecError, Truncation
from .encoder import CodeConstruction, build_codewords, verify_logical_action
from .geometry import Isometry, SurfaceKind, SurfacePoint
from .groups import enumerate_ball, quotient_check
from .resolution import optimize_seed, resolution

__version__ = "0.1.0"

__all__ = ["CodeSpec", "SpecError", "Truncation", "CodeConstruction", "build_codewords", "verify_logical_action",
           "Isometry", "SurfaceKind", "SurfacePoint", "enumerate_ball", "quotient_check", "optimize_seed",
           "resolution"]
