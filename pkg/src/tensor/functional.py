#!/usr/bin/env python3
"""Functional front-end over ``apply_primitive``."""

from typing import Optional, Sequence

import numpy as np

from .core import Tensor, apply_primitive, as_tensor


def add(a, b) -> Tensor:
    return apply_primitive("add", (a, b))


def subtract(a, b) -> Tensor:
    return apply_primitive("subtract", (a, b))


def multiply(a, b) -> Tensor:
    return apply_primitive("multiply", (a, b))


def divide(a, b) -> Tensor:
    return apply_primitive("divide", (a, b))


def negate(a) -> Tensor:
    return apply_primitive("negate", (a,))


def matmul(a, b) -> Tensor:
    return apply_primitive("matmul", (a, b))


def transpose(a) -> Tensor:
    return apply_primitive("transpose", (a,))


def reshape(a, shape: Sequence[int]) -> Tensor:
    return apply_primitive("reshape", (a,), {"shape": tuple(shape)})


def sum(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return apply_primitive("sum", (a,), {"axis": axis, "keepdims": keepdims})


def mean(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return apply_primitive("mean", (a,), {"axis": axis, "keepdims": keepdims})


def abs(a) -> Tensor:  # noqa: A001
    return apply_primitive("abs", (a,))


def square(a) -> Tensor:
    return apply_primitive("square", (a,))


def sqrt(a) -> Tensor:
    return apply_primitive("sqrt", (a,))


def exp(a) -> Tensor:
    return apply_primitive("exp", (a,))


def relu(a) -> Tensor:
    return apply_primitive("relu", (a,))


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    return apply_primitive("concat", tuple(tensors), {"axis": axis})


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    """``a[..., start:stop, ...]`` along ``axis``."""
    return apply_primitive("slice", (a,), {"axis": axis, "start": start, "stop": stop})


def broadcast_to(a, shape: Sequence[int]) -> Tensor:
    return apply_primitive("broadcast", (a,), {"shape": tuple(shape)})


def sum_to(a, shape: Sequence[int]) -> Tensor:
    """Reduce a broadcast result back to ``shape`` (adjoint of broadcast)."""
    return apply_primitive("sum_to", (a,), {"shape": tuple(shape)})


def gather_rows(a, index) -> Tensor:
    index = np.asarray(index, dtype=np.int64)
    return apply_primitive("gather_rows", (a,), {"index": index})


def scatter_add_rows(a, index, num_rows: int) -> Tensor:
    """Sum rows of ``a`` into ``num_rows`` slots: ``out[index[k]] += a[k]``."""
    index = np.asarray(index, dtype=np.int64)
    return apply_primitive(
        "scatter_add_rows", (a,), {"index": index, "num_rows": int(num_rows)}
    )


def masked_fill(a, mask, value: float = 0.0) -> Tensor:
    """Replace entries where ``mask`` is true with ``value``."""
    mask = np.asarray(mask, dtype=bool)
    return apply_primitive("masked_fill", (a,), {"mask": mask, "value": float(value)})


def zeros(shape: Sequence[int]) -> Tensor:
    return Tensor._wrap(np.zeros(tuple(shape)))


def ones(shape: Sequence[int]) -> Tensor:
    return Tensor._wrap(np.ones(tuple(shape)))


__all__ = [
    "add",
    "subtract",
    "multiply",
    "divide",
    "negate",
    "matmul",
    "transpose",
    "reshape",
    "sum",
    "mean",
    "abs",
    "square",
    "sqrt",
    "exp",
    "relu",
    "concat",
    "slice_axis",
    "broadcast_to",
    "sum_to",
    "gather_rows",
    "scatter_add_rows",
    "masked_fill",
    "zeros",
    "ones",
    "as_tensor",
]
