"""Steady and transient fibre orientation tensors with exact Jacobians."""

__version__ = "0.1.0"

from .closures import eval_closure
from .flows import FlowPreset, build_flow, default_guess
from .models import ModelSpec, model_jacobian, model_rate, residual
from .solvers import NewtonOptions, newton_steady, rk4_transient, steady_compare
from .tensors import pack, unpack

__all__ = [
    "eval_closure", "FlowPreset", "build_flow", "default_guess", "ModelSpec",
    "model_jacobian", "model_rate", "residual", "NewtonOptions", "newton_steady",
    "rk4_transient", "steady_compare", "pack", "unpack", "__version__",
]
