#!/usr/bin/env python3
"""
Gradient averaging: an in-memory all-reduce and a socket ring all-reduce.

Ring frames on the wire:

    <u32 version><u32 sequence><u64 payload bytes>
    <payload: float64 little-endian>
    <u64 checksum>

The checksum is 64-bit FNV-1a over the payload bytes.
"""

import socket
import struct
import threading
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

try:
    from numba import njit
except ImportError:  # checksums fall back to a pure-Python loop
    njit = None

from src.exceptions import (
    CommunicationError,
    FrameChecksumError,
    PeerTimeoutError,
    ShapeMismatchError,
)
from src.logging import get_logger
from src.utils import retry

logger = get_logger(__name__)

WIRE_VERSION = 1
DEFAULT_PEER_TIMEOUT = 30.0  # s
_HEADER = struct.Struct("<IIQ")
_CHECKSUM = struct.Struct("<Q")
_F64 = np.dtype("<f8")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def allreduce_mean(worker_grads: Sequence[Mapping[str, np.ndarray]]) -> Dict[str, np.ndarray]:
    """Elementwise mean of per-worker gradient maps."""
    if not worker_grads:
        raise CommunicationError("allreduce_mean needs at least one worker")
    reference = worker_grads[0]
    for rank, grads in enumerate(worker_grads[1:], start=1):
        if set(grads) != set(reference):
            raise CommunicationError(
                "Workers hold different parameter names",
                {"rank": rank, "diff": ", ".join(sorted(set(grads) ^ set(reference)))},
            )
        for name, value in grads.items():
            if np.shape(value) != np.shape(reference[name]):
                raise ShapeMismatchError("allreduce_mean", np.shape(reference[name]), np.shape(value))
    scale = 1.0 / len(worker_grads)
    return {
        name: np.sum([np.asarray(g[name], dtype=np.float64) for g in worker_grads], axis=0) * scale
        for name in reference
    }


@dataclass(frozen=True)
class GradientLayout:
    """Fixed name order and shapes for flattening gradient maps."""

    names: Tuple[str, ...]
    shapes: Tuple[Tuple[int, ...], ...]

    @classmethod
    def of(cls, grads: Mapping[str, np.ndarray]) -> "GradientLayout":
        return cls(tuple(grads), tuple(np.shape(v) for v in grads.values()))

    @property
    def size(self) -> int:
        return int(sum(int(np.prod(s, dtype=np.int64)) for s in self.shapes))

    def flatten(self, grads: Mapping[str, np.ndarray]) -> np.ndarray:
        if tuple(grads) != self.names:
            raise CommunicationError("Gradient names do not match the layout")
        parts = []
        for name, shape in zip(self.names, self.shapes):
            value = np.asarray(grads[name], dtype=np.float64)
            if value.shape != shape:
                raise ShapeMismatchError("flatten", shape, value.shape)
            parts.append(value.reshape(-1))
        return np.concatenate(parts) if parts else np.zeros(0)

    def unflatten(self, vector: np.ndarray) -> Dict[str, np.ndarray]:
        out, start = {}, 0
        for name, shape in zip(self.names, self.shapes):
            stop = start + int(np.prod(shape, dtype=np.int64))
            out[name] = vector[start:stop].reshape(shape).copy()
            start = stop
        return out


def _fnv1a_python(payload: bytes) -> int:
    digest = FNV_OFFSET
    for byte in payload:
        digest = ((digest ^ byte) * FNV_PRIME) & _MASK64
    return digest


if njit is not None:

    @njit(cache=True)
    def _fnv1a_kernel(data, offset, prime):
        digest = offset
        for i in range(data.size):
            digest = (digest ^ np.uint64(data[i])) * prime
        return digest


def fnv1a_64(payload: bytes) -> int:
    """64-bit FNV-1a: xor each byte in, then multiply by the prime mod 2**64."""
    if njit is None:
        return _fnv1a_python(payload)
    data = np.frombuffer(payload, dtype=np.uint8)
    return int(_fnv1a_kernel(data, np.uint64(FNV_OFFSET), np.uint64(FNV_PRIME)))


def encode_frame(sequence: int, values: np.ndarray) -> bytes:
    payload = np.ascontiguousarray(values, dtype=_F64).tobytes()
    return (
        _HEADER.pack(WIRE_VERSION, sequence & 0xFFFFFFFF, len(payload))
        + payload
        + _CHECKSUM.pack(fnv1a_64(payload))
    )


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks, remaining = [], count
    while remaining:
        try:
            chunk = sock.recv(min(remaining, 1 << 20))
        except socket.timeout as e:
            raise PeerTimeoutError("Timed out waiting for ring peer") from e
        if not chunk:
            raise CommunicationError("Ring peer closed the connection")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket, expected_sequence: int) -> np.ndarray:
    version, sequence, size = _HEADER.unpack(_recv_exact(sock, _HEADER.size))
    if version != WIRE_VERSION:
        raise CommunicationError("Ring frame has an unknown wire version", {"version": version})
    if sequence != expected_sequence & 0xFFFFFFFF:
        raise CommunicationError(
            "Ring frame out of order", {"expected": expected_sequence, "given": sequence}
        )
    payload = _recv_exact(sock, size)
    (checksum,) = _CHECKSUM.unpack(_recv_exact(sock, _CHECKSUM.size))
    if checksum != fnv1a_64(payload):
        raise FrameChecksumError("Ring frame failed its checksum", sequence=sequence)
    return np.frombuffer(payload, dtype=_F64).astype(np.float64)


class RingMember:
    """
    One worker's place in a loopback ring: it sends to ``rank + 1`` and
    receives from ``rank - 1``.

    Usage: ``bind`` every member first, share the ports, then ``connect``.
    """

    def __init__(self, rank: int, world_size: int, timeout: float = DEFAULT_PEER_TIMEOUT):
        if not 0 <= rank < world_size:
            raise CommunicationError("Rank outside the ring", {"rank": rank, "world_size": world_size})
        self.rank = rank
        self.world_size = world_size
        self.timeout = timeout
        self.sequence = 0
        self._listener: Optional[socket.socket] = None
        self._next: Optional[socket.socket] = None
        self._prev: Optional[socket.socket] = None

    @classmethod
    def bind(cls, rank: int, world_size: int, timeout: float = DEFAULT_PEER_TIMEOUT) -> "RingMember":
        member = cls(rank, world_size, timeout)
        if world_size > 1:
            listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            listener.bind(("127.0.0.1", 0))
            listener.listen(1)
            listener.settimeout(timeout)
            member._listener = listener
        return member

    @property
    def port(self) -> Optional[int]:
        return self._listener.getsockname()[1] if self._listener else None

    def connect(self, ports: Sequence[int]):
        """Join the ring given every member's listening port (indexed by rank)."""
        if self.world_size == 1:
            return
        target = ports[(self.rank + 1) % self.world_size]

        @retry(max_attempts=40, delay=0.05, backoff=1.5, exceptions=(ConnectionRefusedError, socket.timeout))
        def dial():
            return socket.create_connection(("127.0.0.1", target), timeout=self.timeout)

        self._next = dial()
        self._next.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            self._prev, _ = self._listener.accept()
        except socket.timeout as e:
            raise PeerTimeoutError("Previous ring peer never connected", {"rank": self.rank}) from e
        self._prev.settimeout(self.timeout)
        self._prev.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        logger.debug(f"Rank {self.rank} joined ring of {self.world_size}")

    def _exchange(self, outgoing: np.ndarray) -> np.ndarray:
        """Send to the next peer while receiving from the previous one."""
        sequence = self.sequence
        self.sequence += 1
        frame = encode_frame(sequence, outgoing)
        failure: List[BaseException] = []

        def send():
            try:
                self._next.sendall(frame)
            except OSError as e:
                failure.append(e)

        sender = threading.Thread(target=send, daemon=True)
        sender.start()
        incoming = read_frame(self._prev, sequence)
        sender.join(self.timeout)
        if sender.is_alive():
            raise PeerTimeoutError("Timed out sending to ring peer", {"rank": self.rank})
        if failure:
            raise CommunicationError(f"Ring send failed: {failure[0]}", {"rank": self.rank})
        return incoming

    def allreduce_mean(self, vector: np.ndarray) -> np.ndarray:
        """
        Ring mean of a flat float64 vector: reduce-scatter then all-gather.

        Each chunk's owner divides by the world size before the gather, so
        every member ends with identical bytes.
        """
        vector = np.array(vector, dtype=np.float64).reshape(-1)
        w, r = self.world_size, self.rank
        if w == 1:
            return vector
        bounds = np.linspace(0, vector.size, w + 1).astype(np.int64)
        chunk = [slice(int(bounds[k]), int(bounds[k + 1])) for k in range(w)]

        for step in range(w - 1):
            send_idx, recv_idx = (r - step) % w, (r - step - 1) % w
            received = self._exchange(vector[chunk[send_idx]])
            vector[chunk[recv_idx]] += received

        owned = (r + 1) % w
        vector[chunk[owned]] /= w

        for step in range(w - 1):
            send_idx, recv_idx = (r + 1 - step) % w, (r - step) % w
            vector[chunk[recv_idx]] = self._exchange(vector[chunk[send_idx]])
        return vector

    def close(self):
        for sock in (self._next, self._prev, self._listener):
            if sock is not None:
                try:
                    sock.close()
                except OSError:
                    pass
        self._next = self._prev = self._listener = None


def ring_allreduce(member: RingMember, grads: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Mean of ``grads`` across the ring, same keys and shapes."""
    layout = GradientLayout.of(grads)
    return layout.unflatten(member.allreduce_mean(layout.flatten(grads)))


__all__ = [
    "allreduce_mean",
    "ring_allreduce",
    "RingMember",
    "GradientLayout",
    "fnv1a_64",
    "encode_frame",
    "read_frame",
    "WIRE_VERSION",
    "DEFAULT_PEER_TIMEOUT",
]
