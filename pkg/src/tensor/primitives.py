#!/usr/bin/env python3
"""
Primitive op kinds.

Every adjoint (``vjp``) below is expressed through ``functional`` so that,
under ``create_graph``, differentiating a gradient replays through the same
primitives.
"""

from typing import List, Sequence

import numpy as np

from src.exceptions import AxisError, ShapeMismatchError

from . import functional as F
from .core import Primitive, Tensor, constant, register_primitive


SQRT_GRAD_EPS = 1e-12


def _check_axis(op: str, ndim: int, axis):
    if axis is None:
        return
    if not isinstance(axis, (int, np.integer)) or not -ndim <= axis < ndim:
        raise AxisError(f"Unknown axis for '{op}'", {"axis": axis, "ndim": ndim})


def _norm_axis(axis: int, ndim: int) -> int:
    return axis + ndim if axis < 0 else axis


class _Broadcasting(Primitive):
    def check(self, shapes, attrs):
        try:
            np.broadcast_shapes(*shapes)
        except ValueError:
            raise ShapeMismatchError(self.kind, *shapes) from None


@register_primitive
class Add(_Broadcasting):
    kind = "add"

    def forward(self, a, b):
        return a + b

    def vjp(self, g, inputs, output, attrs):
        a, b = inputs
        return [F.sum_to(g, a.shape), F.sum_to(g, b.shape)]


@register_primitive
class Subtract(_Broadcasting):
    kind = "subtract"

    def forward(self, a, b):
        return a - b

    def vjp(self, g, inputs, output, attrs):
        a, b = inputs
        return [F.sum_to(g, a.shape), F.sum_to(F.negate(g), b.shape)]


@register_primitive
class Multiply(_Broadcasting):
    kind = "multiply"

    def forward(self, a, b):
        return a * b

    def vjp(self, g, inputs, output, attrs):
        a, b = inputs
        return [F.sum_to(F.multiply(g, b), a.shape), F.sum_to(F.multiply(g, a), b.shape)]


@register_primitive
class Divide(_Broadcasting):
    kind = "divide"

    def forward(self, a, b):
        return a / b

    def vjp(self, g, inputs, output, attrs):
        a, b = inputs
        grad_a = F.divide(g, b)
        grad_b = F.negate(F.divide(F.multiply(g, output), b))
        return [F.sum_to(grad_a, a.shape), F.sum_to(grad_b, b.shape)]


@register_primitive
class Negate(Primitive):
    kind = "negate"

    def forward(self, a):
        return -a

    def vjp(self, g, inputs, output, attrs):
        return [F.negate(g)]


@register_primitive
class Matmul(Primitive):
    kind = "matmul"

    def check(self, shapes, attrs):
        a, b = shapes
        if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
            raise ShapeMismatchError(self.kind, a, b)

    def forward(self, a, b):
        return a @ b

    def vjp(self, g, inputs, output, attrs):
        a, b = inputs
        return [F.matmul(g, F.transpose(b)), F.matmul(F.transpose(a), g)]


@register_primitive
class Transpose(Primitive):
    kind = "transpose"

    def forward(self, a):
        return np.transpose(a)

    def vjp(self, g, inputs, output, attrs):
        return [F.transpose(g)]


@register_primitive
class Reshape(Primitive):
    kind = "reshape"

    def check(self, shapes, attrs):
        (shape,) = shapes
        target = tuple(attrs["shape"])
        known = [d for d in target if d != -1]
        total = int(np.prod(shape))
        ok = all(d >= 0 for d in known) and target.count(-1) <= 1
        if ok and -1 in target:
            ok = int(np.prod(known)) > 0 and total % int(np.prod(known)) == 0
        elif ok:
            ok = int(np.prod(target)) == total
        if not ok:
            raise ShapeMismatchError(self.kind, shape, target)

    def forward(self, a, shape):
        return np.reshape(a, shape)

    def vjp(self, g, inputs, output, attrs):
        return [F.reshape(g, inputs[0].shape)]


class _Reduction(Primitive):
    def check(self, shapes, attrs):
        _check_axis(self.kind, len(shapes[0]), attrs.get("axis"))

    @staticmethod
    def _expand(g: Tensor, shape: Sequence[int], axis, keepdims: bool) -> Tensor:
        if axis is not None and not keepdims:
            kept = list(shape)
            kept[_norm_axis(axis, len(shape))] = 1
            g = F.reshape(g, kept)
        return F.broadcast_to(g, shape)


@register_primitive
class Sum(_Reduction):
    kind = "sum"

    def forward(self, a, axis=None, keepdims=False):
        return np.sum(a, axis=axis, keepdims=keepdims)

    def vjp(self, g, inputs, output, attrs):
        shape = inputs[0].shape
        return [self._expand(g, shape, attrs.get("axis"), attrs.get("keepdims", False))]


@register_primitive
class Mean(_Reduction):
    kind = "mean"

    def forward(self, a, axis=None, keepdims=False):
        return np.mean(a, axis=axis, keepdims=keepdims)

    def vjp(self, g, inputs, output, attrs):
        shape = inputs[0].shape
        axis = attrs.get("axis")
        count = int(np.prod(shape)) if axis is None else shape[_norm_axis(axis, len(shape))]
        spread = self._expand(g, shape, axis, attrs.get("keepdims", False))
        return [F.multiply(spread, 1.0 / max(count, 1))]


@register_primitive
class Abs(Primitive):
    kind = "abs"

    def forward(self, a):
        return np.abs(a)

    def vjp(self, g, inputs, output, attrs):
        # sign(0) == 0
        return [F.multiply(g, constant(np.sign, inputs[0]))]


@register_primitive
class Square(Primitive):
    kind = "square"

    def forward(self, a):
        return a * a

    def vjp(self, g, inputs, output, attrs):
        return [F.multiply(g, F.multiply(inputs[0], 2.0))]


@register_primitive
class Sqrt(Primitive):
    """Square root; the slope is capped at ``1 / (2 * SQRT_GRAD_EPS)`` near zero."""

    kind = "sqrt"

    def forward(self, a):
        return np.sqrt(a)

    def vjp(self, g, inputs, output, attrs):
        floor = np.asarray(output.data < SQRT_GRAD_EPS)
        return [F.divide(g, F.multiply(F.masked_fill(output, floor, SQRT_GRAD_EPS), 2.0))]


@register_primitive
class Exp(Primitive):
    kind = "exp"

    def forward(self, a):
        return np.exp(a)

    def vjp(self, g, inputs, output, attrs):
        return [F.multiply(g, output)]


@register_primitive
class Relu(Primitive):
    kind = "relu"

    def forward(self, a):
        return np.maximum(a, 0.0)

    def vjp(self, g, inputs, output, attrs):
        # derivative at 0 is 0
        return [F.multiply(g, constant(lambda x: (x > 0).astype(np.float64), inputs[0]))]


@register_primitive
class Concat(Primitive):
    kind = "concat"

    def check(self, shapes, attrs):
        if not shapes:
            raise ShapeMismatchError(self.kind)
        ndim = len(shapes[0])
        axis = attrs.get("axis", 0)
        _check_axis(self.kind, ndim, axis)
        axis = _norm_axis(axis, ndim)
        for shape in shapes[1:]:
            if len(shape) != ndim or any(
                s != t for i, (s, t) in enumerate(zip(shape, shapes[0])) if i != axis
            ):
                raise ShapeMismatchError(self.kind, shapes[0], shape)

    def forward(self, *arrays, axis=0):
        return np.concatenate(arrays, axis=axis)

    def vjp(self, g, inputs, output, attrs):
        axis = _norm_axis(attrs.get("axis", 0), len(output.shape))
        grads, start = [], 0
        for tensor in inputs:
            stop = start + tensor.shape[axis]
            grads.append(F.slice_axis(g, axis, start, stop))
            start = stop
        return grads


@register_primitive
class Slice(Primitive):
    kind = "slice"

    def check(self, shapes, attrs):
        (shape,) = shapes
        _check_axis(self.kind, len(shape), attrs["axis"])
        extent = shape[_norm_axis(attrs["axis"], len(shape))]
        if not 0 <= attrs["start"] <= attrs["stop"] <= extent:
            raise ShapeMismatchError(self.kind, shape, (attrs["start"], attrs["stop"]))

    def forward(self, a, axis, start, stop):
        index = [slice(None)] * a.ndim
        index[axis] = slice(start, stop)
        return a[tuple(index)]

    def vjp(self, g, inputs, output, attrs):
        shape = list(inputs[0].shape)
        axis = _norm_axis(attrs["axis"], len(shape))
        parts = []
        if attrs["start"] > 0:
            before = list(shape)
            before[axis] = attrs["start"]
            parts.append(F.zeros(before))
        parts.append(g)
        if attrs["stop"] < shape[axis]:
            after = list(shape)
            after[axis] = shape[axis] - attrs["stop"]
            parts.append(F.zeros(after))
        if len(parts) == 1:
            return [g]
        return [F.concat(parts, axis=axis)]


@register_primitive
class Broadcast(Primitive):
    kind = "broadcast"

    def check(self, shapes, attrs):
        (shape,) = shapes
        target = tuple(attrs["shape"])
        try:
            ok = np.broadcast_shapes(shape, target) == target
        except ValueError:
            ok = False
        if not ok:
            raise ShapeMismatchError(self.kind, shape, target)

    def forward(self, a, shape):
        return np.broadcast_to(a, shape)

    def vjp(self, g, inputs, output, attrs):
        return [F.sum_to(g, inputs[0].shape)]


@register_primitive
class SumTo(Primitive):
    kind = "sum_to"

    def check(self, shapes, attrs):
        (shape,) = shapes
        target = tuple(attrs["shape"])
        try:
            ok = np.broadcast_shapes(shape, target) == tuple(shape)
        except ValueError:
            ok = False
        if not ok:
            raise ShapeMismatchError(self.kind, shape, target)

    def forward(self, a, shape):
        shape = tuple(shape)
        if a.shape == shape:
            return a
        lead = a.ndim - len(shape)
        out = a.sum(axis=tuple(range(lead))) if lead > 0 else a
        axes = tuple(i for i, d in enumerate(shape) if d == 1 and out.shape[i] != 1)
        if axes:
            out = out.sum(axis=axes, keepdims=True)
        return out

    def vjp(self, g, inputs, output, attrs):
        return [F.broadcast_to(g, inputs[0].shape)]


@register_primitive
class GatherRows(Primitive):
    kind = "gather_rows"

    def check(self, shapes, attrs):
        (shape,) = shapes
        index = attrs["index"]
        if len(shape) == 0 or index.ndim != 1:
            raise ShapeMismatchError(self.kind, shape, index.shape)
        if index.size and (index.min() < 0 or index.max() >= shape[0]):
            raise ShapeMismatchError(self.kind, shape, (int(index.min()), int(index.max())))

    def forward(self, a, index):
        return a[index]

    def vjp(self, g, inputs, output, attrs):
        return [F.scatter_add_rows(g, attrs["index"], inputs[0].shape[0])]


@register_primitive
class ScatterAddRows(Primitive):
    kind = "scatter_add_rows"

    def check(self, shapes, attrs):
        (shape,) = shapes
        index = attrs["index"]
        if len(shape) == 0 or index.ndim != 1 or index.shape[0] != shape[0]:
            raise ShapeMismatchError(self.kind, shape, index.shape)
        if index.size and (index.min() < 0 or index.max() >= attrs["num_rows"]):
            raise ShapeMismatchError(self.kind, shape, (attrs["num_rows"],))

    def forward(self, a, index, num_rows):
        out = np.zeros((num_rows,) + a.shape[1:], dtype=np.float64)
        np.add.at(out, index, a)
        return out

    def vjp(self, g, inputs, output, attrs):
        return [F.gather_rows(g, attrs["index"])]


@register_primitive
class MaskedFill(Primitive):
    kind = "masked_fill"

    def check(self, shapes, attrs):
        (shape,) = shapes
        mask = attrs["mask"]
        try:
            ok = np.broadcast_shapes(mask.shape, shape) == tuple(shape)
        except ValueError:
            ok = False
        if not ok:
            raise ShapeMismatchError(self.kind, shape, mask.shape)

    def forward(self, a, mask, value):
        return np.where(mask, value, a)

    def vjp(self, g, inputs, output, attrs):
        return [F.masked_fill(g, attrs["mask"], 0.0)]


DIFFERENTIABLE_KINDS: List[str] = [
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
    "slice",
    "broadcast",
    "sum_to",
    "gather_rows",
    "scatter_add_rows",
    "masked_fill",
]

