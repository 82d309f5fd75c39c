#!/usr/bin/env python3
"""
adsorbkit tensor engine

Dense float64 tensors with tape-based reverse-mode differentiation that
supports differentiating through gradients (forces as energy gradients,
trained end to end).
"""

from . import functional
from . import primitives as _primitives  # noqa: F401  (registers op kinds)
from .autodiff import finite_difference, grad
from .core import Tape, TapeNode, Tensor, apply_primitive, as_tensor
from .primitives import DIFFERENTIABLE_KINDS

__all__ = [
    "Tape",
    "TapeNode",
    "Tensor",
    "apply_primitive",
    "as_tensor",
    "grad",
    "finite_difference",
    "functional",
    "DIFFERENTIABLE_KINDS",
]
