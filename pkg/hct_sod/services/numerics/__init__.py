"""
Differentiable float64 tensor substrate
"""
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import DTYPE, Function, Graph, Tensor

__all__ = ["DTYPE", "Function", "Graph", "ParamStore", "Tensor"]
