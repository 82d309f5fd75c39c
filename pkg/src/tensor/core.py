#!/usr/bin/env python3
"""
Tensor and Tape: the recording half of the reverse-mode engine.

A ``Tensor`` wraps a read-only float64 numpy array. When it was produced
on a ``Tape`` it also carries the id of the tape node that made it. Tapes
are append-only; a node's parents always have smaller ids, so a reverse
scan over ids is a valid topological order.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import TapeError, TensorError

# kind -> Primitive instance, filled by ``register_primitive``
PRIMITIVES: Dict[str, "Primitive"] = {}


class Primitive:
    """
    One differentiable op kind.

    Subclasses implement ``forward`` on numpy arrays and ``vjp`` on Tensors.
    ``vjp`` must be written with Tensor ops only, which is what makes
    gradients themselves differentiable when ``create_graph`` is set.
    """

    kind: str = ""

    def check(self, shapes: Sequence[tuple], attrs: Dict[str, Any]):
        """Raise ShapeMismatchError / AxisError for non-conforming inputs."""

    def forward(self, *arrays: np.ndarray, **attrs: Any) -> np.ndarray:
        raise NotImplementedError

    def vjp(
        self,
        cotangent: "Tensor",
        inputs: Sequence["Tensor"],
        output: "Tensor",
        attrs: Dict[str, Any],
    ) -> List[Optional["Tensor"]]:
        raise NotImplementedError


def register_primitive(cls):
    """Class decorator adding a Primitive subclass to the registry."""
    PRIMITIVES[cls.kind] = cls()
    return cls


@dataclass
class TapeNode:
    """A recorded op: kind, parent node ids, and the values it saw."""

    node_id: int
    kind: str
    parents: Tuple[Optional[int], ...]
    inputs: Tuple["Tensor", ...]
    attrs: Dict[str, Any]
    value: np.ndarray

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass
class Tape:
    """Append-only record of primitive applications for one training step."""

    nodes: List[TapeNode] = field(default_factory=list)

    @property
    def next_id(self) -> int:
        return len(self.nodes)

    def _append(self, kind, parents, inputs, attrs, value) -> int:
        node_id = self.next_id
        self.nodes.append(TapeNode(node_id, kind, parents, inputs, attrs, value))
        return node_id

    def watch(self, tensor: "Tensor") -> "Tensor":
        """Return a copy of ``tensor`` recorded as a leaf of this tape."""
        if tensor.tape is not None:
            raise TapeError("Tensor is already recorded on a tape")
        node_id = self._append("leaf", (), (), {}, tensor.data)
        return Tensor._wrap(tensor.data, self, node_id)

    def variable(self, data: Any) -> "Tensor":
        """Shorthand for ``watch(Tensor(data))``."""
        return self.watch(Tensor(data))

    def replay(self) -> bool:
        """
        Re-run every recorded primitive from the saved leaf values.

        Returns True when each recomputed output is bit-identical to the
        recorded one.
        """
        values: Dict[int, np.ndarray] = {}
        for node in self.nodes:
            if node.is_leaf:
                values[node.node_id] = node.value
                continue
            arrays = [
                values[parent] if parent is not None else tensor.data
                for parent, tensor in zip(node.parents, node.inputs)
            ]
            result = np.asarray(
                PRIMITIVES[node.kind].forward(*arrays, **node.attrs), dtype=np.float64
            )
            if result.shape != node.value.shape or not np.array_equal(
                result, node.value, equal_nan=True
            ):
                return False
            values[node.node_id] = result
        return True

    def __len__(self) -> int:
        return len(self.nodes)


class Tensor:
    """
    Dense float64 array, optionally recorded on a Tape.

    Tensors are immutable: their array is flagged read-only and every op
    returns a new Tensor.
    """

    __slots__ = ("data", "tape", "node_id")
    __array_priority__ = 100

    def __init__(self, data: Any):
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=np.float64, copy=True)
        array.setflags(write=False)
        self.data = array
        self.tape: Optional[Tape] = None
        self.node_id: Optional[int] = None

    @classmethod
    def _wrap(
        cls, array: np.ndarray, tape: Optional[Tape] = None, node_id: Optional[int] = None
    ) -> "Tensor":
        obj = cls.__new__(cls)
        array = np.asarray(array, dtype=np.float64)
        if array.flags.writeable:
            array.setflags(write=False)
        obj.data = array
        obj.tape = tape
        obj.node_id = node_id
        return obj

    # -- properties -------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Writable copy of the underlying values."""
        return np.array(self.data)

    def item(self) -> float:
        if self.size != 1:
            raise TensorError("item() needs a single-element tensor", {"shape": self.shape})
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, no tape."""
        return Tensor._wrap(self.data)

    def __repr__(self) -> str:
        where = f", node={self.node_id}" if self.tape is not None else ""
        return f"Tensor(shape={self.shape}{where})"

    def __len__(self) -> int:
        return self.shape[0]

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return apply_primitive("add", (self, as_tensor(other)))

    def __radd__(self, other):
        return apply_primitive("add", (as_tensor(other), self))

    def __sub__(self, other):
        return apply_primitive("subtract", (self, as_tensor(other)))

    def __rsub__(self, other):
        return apply_primitive("subtract", (as_tensor(other), self))

    def __mul__(self, other):
        return apply_primitive("multiply", (self, as_tensor(other)))

    def __rmul__(self, other):
        return apply_primitive("multiply", (as_tensor(other), self))

    def __truediv__(self, other):
        return apply_primitive("divide", (self, as_tensor(other)))

    def __rtruediv__(self, other):
        return apply_primitive("divide", (as_tensor(other), self))

    def __neg__(self):
        return apply_primitive("negate", (self,))

    def __matmul__(self, other):
        return apply_primitive("matmul", (self, as_tensor(other)))

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return apply_primitive("sum", (self,), {"axis": axis, "keepdims": keepdims})

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return apply_primitive("mean", (self,), {"axis": axis, "keepdims": keepdims})

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return apply_primitive("reshape", (self,), {"shape": tuple(shape)})

    @property
    def T(self) -> "Tensor":
        return apply_primitive("transpose", (self,))


def as_tensor(value: Any) -> Tensor:
    """Pass Tensors through; wrap anything else as a tape-free constant."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _resolve_tape(inputs: Sequence[Tensor]) -> Optional[Tape]:
    tape = None
    for tensor in inputs:
        if tensor.tape is None:
            continue
        if tape is None:
            tape = tensor.tape
        elif tensor.tape is not tape:
            raise TapeError("Inputs are recorded on different tapes")
    return tape


def apply_primitive(
    kind: str, inputs: Sequence[Tensor], attrs: Optional[Dict[str, Any]] = None
) -> Tensor:
    """
    Evaluate one primitive and, when any input is on a tape, record it.

    Tape-free inputs act as constants of the recorded node.
    """
    primitive = PRIMITIVES.get(kind)
    if primitive is None:
        raise TensorError(f"Unknown op kind '{kind}'", {"known": ", ".join(sorted(PRIMITIVES))})
    attrs = dict(attrs or {})
    inputs = tuple(as_tensor(t) for t in inputs)
    primitive.check([t.shape for t in inputs], attrs)
    tape = _resolve_tape(inputs)

    value = np.asarray(primitive.forward(*(t.data for t in inputs), **attrs), dtype=np.float64)

    if tape is None:
        return Tensor._wrap(value)

    parents = tuple(t.node_id if t.tape is tape else None for t in inputs)
    node_id = tape._append(kind, parents, inputs, attrs, value)
    return Tensor._wrap(value, tape, node_id)


def constant(fn: Callable[..., np.ndarray], *tensors: Tensor) -> Tensor:
    """Build a tape-free Tensor from the values of ``tensors``."""
    return Tensor._wrap(np.asarray(fn(*(t.data for t in tensors)), dtype=np.float64))


__all__ = [
    "PRIMITIVES",
    "Primitive",
    "register_primitive",
    "Tape",
    "TapeNode",
    "Tensor",
    "as_tensor",
    "apply_primitive",
    "constant",
]
