"""Numerical checks for conformal semi-invariant submersions from quaternionic Kaehler manifolds."""
from .engine import DEFAULT_ENGINE, DiffEngine
from .manifold import DomainError, Manifold, NumericError
from .quaternionic import QuaternionicBasis
from .report import CheckReport
from .semi_invariant import ClassificationVerdict, DistributionSplit, Geometry, classify, decompose, detect_split
from .submersion import SmoothMap, analyze

__all__ = [
    "CheckReport", "ClassificationVerdict", "DEFAULT_ENGINE", "DiffEngine", "DistributionSplit", "DomainError",
    "Geometry", "Manifold", "NumericError", "QuaternionicBasis", "SmoothMap", "analyze", "classify", "decompose",
    "detect_split",
]

__version__ = "0.1.0"
