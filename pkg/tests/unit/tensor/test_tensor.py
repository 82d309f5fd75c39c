#!/usr/bin/env python3
"""
Unit tests for Tensor, Tape and shape checking.
"""

import numpy as np
import pytest

from src.exceptions import AxisError, ShapeMismatchError, TapeError, TensorError
from src.tensor import DIFFERENTIABLE_KINDS, Tape, Tensor, as_tensor
from src.tensor import functional as F


class TestTensor:
    """Test suite for Tensor values."""

    def test_float64_and_read_only(self):
        """Test tensors hold read-only float64 copies."""
        source = np.arange(6).reshape(2, 3)
        t = Tensor(source)
        assert t.data.dtype == np.float64
        assert not t.data.flags.writeable
        source[0, 0] = 100
        assert t.data[0, 0] == 0.0

    def test_numpy_returns_writable_copy(self):
        """Test numpy() can be written without touching the tensor."""
        t = Tensor([1.0, 2.0])
        copy = t.numpy()
        copy[0] = 9.0
        assert t.data[0] == 1.0

    def test_wrapping_a_tensor_copies_values(self):
        """Test Tensor(Tensor) yields an equal tape-free tensor."""
        tape = Tape()
        recorded = tape.variable([1.0, 2.0])
        t = Tensor(recorded)
        assert t.tape is None
        np.testing.assert_array_equal(t.data, recorded.data)

    def test_operator_sugar(self):
        """Test arithmetic operators route through primitives."""
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal((a + 1).data, [[2, 3], [4, 5]])
        np.testing.assert_array_equal((2 * a).data, [[2, 4], [6, 8]])
        np.testing.assert_array_equal((a - a).data, np.zeros((2, 2)))
        np.testing.assert_array_equal((1 / a).data, 1 / a.data)
        np.testing.assert_array_equal((a @ a).data, a.data @ a.data)
        np.testing.assert_array_equal(a.T.data, a.data.T)
        np.testing.assert_array_equal((-a).data, -a.data)
        assert a.sum().item() == 10.0
        assert a.mean().item() == 2.5
        assert a.reshape(4).shape == (4,)

    def test_item_needs_single_element(self):
        """Test item() rejects multi-element tensors."""
        with pytest.raises(TensorError):
            Tensor([1.0, 2.0]).item()

    def test_as_tensor_passthrough(self):
        """Test as_tensor returns Tensors unchanged."""
        t = Tensor(1.0)
        assert as_tensor(t) is t
        assert isinstance(as_tensor(3), Tensor)


class TestShapeChecks:
    """Shape and axis validation happens before any arithmetic."""

    def test_incompatible_broadcast(self):
        """Test adding (2, 3) and (4,) fails."""
        with pytest.raises(ShapeMismatchError):
            F.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros(4)))

    def test_matmul_inner_dimension(self):
        """Test matmul requires matching inner dimensions."""
        with pytest.raises(ShapeMismatchError):
            F.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_reduction_axis(self):
        """Test reducing over a missing axis fails."""
        with pytest.raises(AxisError):
            F.sum(Tensor(np.zeros((2, 3))), axis=2)

    def test_reshape_size(self):
        """Test reshape must preserve the element count."""
        with pytest.raises(ShapeMismatchError):
            F.reshape(Tensor(np.zeros(6)), (4, 2))

    def test_reshape_infers_one_dimension(self):
        """Test a single -1 is inferred."""
        assert F.reshape(Tensor(np.zeros(6)), (-1, 2)).shape == (3, 2)

    def test_concat_trailing_shapes(self):
        """Test concat rejects different non-axis extents."""
        with pytest.raises(ShapeMismatchError):
            F.concat([Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4)))], axis=0)

    def test_gather_index_range(self):
        """Test gather_rows rejects out-of-range rows."""
        with pytest.raises(ShapeMismatchError):
            F.gather_rows(Tensor(np.zeros((3, 2))), [0, 3])

    def test_scatter_rows(self):
        """Test scatter_add_rows sums rows into their slots."""
        out = F.scatter_add_rows(Tensor([[1.0], [2.0], [4.0]]), [1, 0, 1], 3)
        np.testing.assert_array_equal(out.data, [[2.0], [5.0], [0.0]])

    def test_masked_fill_broadcasts_mask(self):
        """Test a trailing-singleton mask fills whole rows."""
        mask = np.array([[True], [False]])
        out = F.masked_fill(Tensor(np.ones((2, 3))), mask, -1.0)
        np.testing.assert_array_equal(out.data, [[-1, -1, -1], [1, 1, 1]])


class TestTape:
    """Test suite for Tape recording and replay."""

    def test_watch_records_leaf(self):
        """Test watch creates a leaf node."""
        tape = Tape()
        x = tape.watch(Tensor([1.0, 2.0]))
        assert x.tape is tape
        assert tape.nodes[x.node_id].is_leaf

    def test_watch_twice_fails(self):
        """Test a recorded tensor cannot be watched again."""
        tape = Tape()
        x = tape.variable([1.0])
        with pytest.raises(TapeError):
            tape.watch(x)

    def test_constants_are_not_recorded(self):
        """Test tape-free ops leave no trace."""
        tape = Tape()
        F.exp(Tensor([1.0]))
        assert len(tape) == 0

    def test_constants_mix_with_one_tape(self):
        """Test a tape tensor combined with a constant stays on its tape."""
        tape = Tape()
        x = tape.variable([1.0, 2.0])
        y = F.multiply(x, Tensor([3.0, 4.0]))
        assert y.tape is tape
        assert tape.nodes[y.node_id].parents == (x.node_id, None)

    def test_two_tapes_do_not_mix(self):
        """Test combining tensors of different tapes fails."""
        a = Tape().variable([1.0])
        b = Tape().variable([1.0])
        with pytest.raises(TapeError):
            F.add(a, b)

    def test_replay_is_bit_exact(self):
        """Test replay reproduces every recorded value."""
        tape = Tape()
        x = tape.variable(np.linspace(-1, 1, 6).reshape(2, 3))
        y = F.relu(F.matmul(x, F.transpose(x)))
        F.sum(F.sqrt(F.add(F.square(y), 1.0)))
        assert tape.replay()

    def test_replay_detects_tampering(self):
        """Test replay notices a recorded value that no longer matches."""
        tape = Tape()
        x = tape.variable([1.0, 2.0])
        y = F.exp(x)
        node = tape.nodes[y.node_id]
        node.value = node.value + 1.0
        assert not tape.replay()

    def test_unknown_kind_rejected(self):
        """Test apply_primitive refuses unregistered kinds."""
        from src.tensor import apply_primitive

        with pytest.raises(TensorError):
            apply_primitive("softmax", (Tensor([1.0]),))

    def test_all_kinds_registered(self):
        """Test the differentiable kinds list covers the broadcasting helpers."""
        for kind in ("sum_to", "broadcast", "reshape", "transpose", "masked_fill"):
            assert kind in DIFFERENTIABLE_KINDS
