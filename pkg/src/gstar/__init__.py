"""Multilinear square functions over finitely atomic measures, with the dyadic
and decomposition machinery around them and numerical lemma checks."""
from ._accel import HAS_NUMBA, set_threads
from .kernel import KernelSpec
from .measure import AtomicMeasure, Ball, Cube, SampledFunction
from .operator import LambdaParams, QuadratureSpec, g_star, lusin_area, theta
from .dyadic import DyadicCube, GoodnessParams, ShiftSequence, sample_shift

__version__ = "0.1.0"

__all__ = [
    "HAS_NUMBA", "set_threads", "KernelSpec", "AtomicMeasure", "Ball", "Cube", "SampledFunction",
    "LambdaParams", "QuadratureSpec", "g_star", "lusin_area", "theta",
    "DyadicCube", "GoodnessParams", "ShiftSequence", "sample_shift", "__version__",
]
