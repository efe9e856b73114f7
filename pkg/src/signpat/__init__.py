"""Sign patterns of polynomial floors, torus models of multiplicative functions, and twist search."""

__version__ = "0.1.0"

from .patterns import PatternSet, SignPattern, enumerate_patterns, sample_patterns  # noqa: E402
from .poly import BinomialCoords, MultiplicativeFn, RationalPoly  # noqa: E402

__all__ = [
    "BinomialCoords",
    "MultiplicativeFn",
    "PatternSet",
    "RationalPoly",
    "SignPattern",
    "__version__",
    "enumerate_patterns",
    "sample_patterns",
]
