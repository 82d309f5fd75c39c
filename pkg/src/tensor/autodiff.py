#!/usr/bin/env python3
"""
Reverse-mode differentiation over a Tape, plus a central-difference oracle.

``grad`` walks node ids from the output down to zero. With
``create_graph`` the adjoint computations use the live recorded tensors, so
they are themselves appended to the same tape and can be differentiated
again (reverse-over-reverse). Without it every adjoint runs on detached
values and nothing new is recorded.
"""

from typing import Callable, Dict, List, Sequence, Union

import numpy as np

from src.exceptions import TapeError

from . import functional as F
from .core import PRIMITIVES, Tape, Tensor


def _node_output(tape: Tape, node_id: int, live: bool) -> Tensor:
    node = tape.nodes[node_id]
    if live:
        return Tensor._wrap(node.value, tape, node_id)
    return Tensor._wrap(node.value)


def grad(
    output: Tensor,
    wrt: Union[Tensor, Sequence[Tensor]],
    create_graph: bool = False,
) -> List[Tensor]:
    """
    Gradients of a scalar ``output`` with respect to each tensor in ``wrt``.

    Args:
        output: Single-element tensor recorded on a tape
        wrt: Tensors recorded on the same tape
        create_graph: Record the adjoint computation so the returned
            gradients can be differentiated again

    Returns:
        One gradient per ``wrt`` entry, same shape; zeros when ``output``
        does not depend on it.
    """
    if isinstance(wrt, Tensor):
        wrt = [wrt]
    if output.size != 1:
        raise TapeError("grad() needs a scalar output", {"shape": output.shape})
    tape = output.tape
    if tape is None:
        raise TapeError("grad() output is not recorded on a tape")
    for tensor in wrt:
        if tensor.tape is not tape:
            raise TapeError("grad() inputs must be recorded on the output's tape")

    cotangents: Dict[int, Tensor] = {output.node_id: F.ones(output.shape)}
    for node_id in range(output.node_id, -1, -1):
        g = cotangents.get(node_id)
        if g is None:
            continue
        node = tape.nodes[node_id]
        if node.is_leaf or all(parent is None for parent in node.parents):
            continue

        if create_graph:
            inputs = node.inputs
        else:
            inputs = tuple(t.detach() for t in node.inputs)
        out = _node_output(tape, node_id, create_graph)
        contributions = PRIMITIVES[node.kind].vjp(g, inputs, out, node.attrs)

        for parent, contribution in zip(node.parents, contributions):
            if parent is None or contribution is None:
                continue
            previous = cotangents.get(parent)
            cotangents[parent] = contribution if previous is None else previous + contribution

    results = []
    for tensor in wrt:
        g = cotangents.get(tensor.node_id)
        results.append(F.zeros(tensor.shape) if g is None else g)
    return results


def finite_difference(
    f: Callable[[Tensor], Union[Tensor, float]],
    x: Union[Tensor, np.ndarray],
    h: float = 1e-5,
) -> Tensor:
    """
    Central-difference gradient estimate of a scalar function.

    Args:
        f: Deterministic scalar-valued function of a tape-free Tensor
        x: Evaluation point
        h: Step, must be positive

    Returns:
        ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for every component i
    """
    if h <= 0:
        raise ValueError("finite_difference step must be positive")
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    estimate = np.zeros_like(base)
    flat = base.reshape(-1)

    def evaluate(values: np.ndarray) -> float:
        result = f(Tensor(values.reshape(base.shape)))
        return result.item() if isinstance(result, Tensor) else float(result)

    for i in range(flat.size):
        plus = flat.copy()
        minus = flat.copy()
        plus[i] += h
        minus[i] -= h
        estimate.reshape(-1)[i] = (evaluate(plus) - evaluate(minus)) / (2.0 * h)
    return Tensor._wrap(estimate)


__all__ = ["grad", "finite_difference"]
