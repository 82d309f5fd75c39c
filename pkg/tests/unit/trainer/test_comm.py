#!/usr/bin/env python3
"""
Unit tests for gradient averaging and the socket ring.
"""

import socket
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from src.exceptions import CommunicationError, FrameChecksumError, ShapeMismatchError
from src.trainer import GradientLayout, RingMember, allreduce_mean, ring_allreduce
from src.trainer.comm import _fnv1a_python, encode_frame, fnv1a_64, read_frame


def run_ring(vectors, timeout=10.0):
    """All-reduce one vector per rank over a loopback ring of threads."""
    world = len(vectors)
    members = [RingMember.bind(rank, world, timeout) for rank in range(world)]
    ports = [m.port for m in members]
    try:
        with ThreadPoolExecutor(max_workers=world) as pool:
            list(pool.map(lambda m: m.connect(ports), members))
            return list(pool.map(lambda mv: mv[0].allreduce_mean(mv[1]), zip(members, vectors)))
    finally:
        for m in members:
            m.close()


class TestAllreduceMean:
    """Test suite for the in-memory all-reduce."""

    def test_mean(self):
        """Test the result is the elementwise mean."""
        grads = [{"w": np.array([1.0, 2.0])}, {"w": np.array([3.0, 6.0])}]
        np.testing.assert_array_equal(allreduce_mean(grads)["w"], [2.0, 4.0])

    def test_name_mismatch(self):
        """Test workers must agree on parameter names."""
        with pytest.raises(CommunicationError):
            allreduce_mean([{"w": np.zeros(2)}, {"b": np.zeros(2)}])

    def test_shape_mismatch(self):
        """Test workers must agree on shapes."""
        with pytest.raises(ShapeMismatchError):
            allreduce_mean([{"w": np.zeros(2)}, {"w": np.zeros(3)}])

    def test_empty(self):
        """Test at least one worker is needed."""
        with pytest.raises(CommunicationError):
            allreduce_mean([])


class TestRing:
    """Test suite for the ring all-reduce."""

    @pytest.mark.parametrize("world", [2, 3, 4])
    def test_matches_mean(self, world, rng):
        """Test every rank ends with the mean, byte-identical across ranks."""
        vectors = [rng.normal(size=1003) for _ in range(world)]
        results = run_ring(vectors)
        expected = np.mean(vectors, axis=0)
        for result in results:
            np.testing.assert_allclose(result, expected, rtol=0, atol=1e-12)
            assert result.tobytes() == results[0].tobytes()

    def test_fewer_elements_than_ranks(self):
        """Test empty chunks travel fine."""
        results = run_ring([np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0, 0.0])])
        for result in results:
            np.testing.assert_allclose(result, [3.0, 2.0])

    def test_single_member(self):
        """Test a ring of one returns its input."""
        member = RingMember.bind(0, 1)
        member.connect([None])
        np.testing.assert_array_equal(member.allreduce_mean(np.array([1.5, 2.5])), [1.5, 2.5])

    def test_ring_allreduce_maps(self, rng):
        """Test gradient maps keep names and shapes through the ring."""
        grads = [{"w": rng.normal(size=(3, 2)), "b": rng.normal(size=2)} for _ in range(2)]
        members = [RingMember.bind(rank, 2, 10.0) for rank in range(2)]
        ports = [m.port for m in members]
        try:
            with ThreadPoolExecutor(max_workers=2) as pool:
                list(pool.map(lambda m: m.connect(ports), members))
                results = list(pool.map(lambda mg: ring_allreduce(*mg), zip(members, grads)))
        finally:
            for m in members:
                m.close()
        expected = allreduce_mean(grads)
        for result in results:
            assert list(result) == ["w", "b"]
            np.testing.assert_allclose(result["w"], expected["w"], atol=1e-12)

    def test_rank_outside_ring(self):
        """Test a rank must lie in [0, world_size)."""
        with pytest.raises(CommunicationError):
            RingMember(2, 2)


class TestFrames:
    """Test suite for ring frames and checksums."""

    def test_round_trip(self):
        """Test a frame reads back the sent values."""
        a, b = socket.socketpair()
        try:
            a.sendall(encode_frame(7, np.array([1.0, -2.5, 3.25])))
            np.testing.assert_array_equal(read_frame(b, 7), [1.0, -2.5, 3.25])
        finally:
            a.close()
            b.close()

    def test_corrupted_payload(self):
        """Test a flipped payload byte fails the checksum."""
        frame = bytearray(encode_frame(0, np.arange(300, dtype=np.float64)))
        frame[20] ^= 0x01
        a, b = socket.socketpair()
        try:
            a.sendall(bytes(frame))
            with pytest.raises(FrameChecksumError):
                read_frame(b, 0)
        finally:
            a.close()
            b.close()

    def test_out_of_order(self):
        """Test a frame with an unexpected sequence is refused."""
        a, b = socket.socketpair()
        try:
            a.sendall(encode_frame(3, np.zeros(2)))
            with pytest.raises(CommunicationError):
                read_frame(b, 4)
        finally:
            a.close()
            b.close()

    @pytest.mark.parametrize(
        "payload, digest",
        [
            (b"", 0xCBF29CE484222325),
            (b"a", 0xAF63DC4C8601EC8C),
            (b"foobar", 0x85944171F73967E8),
            (np.arange(4, dtype="<f8").tobytes(), 0xB90557CFD5E83390),
        ],
    )
    def test_checksum_known_answers(self, payload, digest):
        """Test the checksum is standard 64-bit FNV-1a."""
        assert fnv1a_64(payload) == digest

    def test_checksum_matches_byte_loop(self, rng):
        """Test the compiled and pure-Python checksums agree."""
        for size in (0, 1, 7, 8, 4097):
            payload = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
            assert fnv1a_64(payload) == _fnv1a_python(payload)

    def test_checksum_sensitivity(self):
        """Test the checksum depends on content, position and length."""
        base = np.arange(600, dtype=np.float64)
        swapped = base.copy()
        swapped[[0, 256]] = swapped[[256, 0]]
        digests = {
            fnv1a_64(base.tobytes()),
            fnv1a_64(swapped.tobytes()),
            fnv1a_64(base[:-1].tobytes()),
            fnv1a_64(np.append(base, 0.0).tobytes()),
        }
        assert len(digests) == 4


class TestGradientLayout:
    """Test suite for GradientLayout."""

    def test_flatten_unflatten(self, rng):
        """Test unflatten inverts flatten."""
        grads = {"a": rng.normal(size=(2, 3)), "b": rng.normal(size=4)}
        layout = GradientLayout.of(grads)
        assert layout.size == 10
        restored = layout.unflatten(layout.flatten(grads))
        for name in grads:
            np.testing.assert_array_equal(restored[name], grads[name])

    def test_flatten_checks_names(self):
        """Test flatten refuses maps with a different layout."""
        layout = GradientLayout.of({"a": np.zeros(2)})
        with pytest.raises(CommunicationError):
            layout.flatten({"b": np.zeros(2)})
        with pytest.raises(ShapeMismatchError):
            layout.flatten({"a": np.zeros(3)})
