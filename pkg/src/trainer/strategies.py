#!/usr/bin/env python3
"""
Execution strategies for one optimizer micro-step.

- ``single``: the whole batch on the calling thread.
- ``threaded-ddp``: contiguous shards on a thread pool, each with its own
  tape, merged with ``allreduce_mean``.
- ``process-ddp``: every rank runs the same loop in its own process and
  averages gradients over a loopback socket ring. Rank 0 is the caller.

Shards are contiguous; when the batch does not divide evenly the last
worker takes the remainder.
"""

import multiprocessing as mp
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import AdsorbKitError, CommunicationError, WorkerError
from src.logging import get_logger, set_worker_rank, setup_logging
from src.models import EnergyModel
from src.tasks import Normalizer, TaskDataset, parameter_gradients

from .comm import DEFAULT_PEER_TIMEOUT, GradientLayout, RingMember, allreduce_mean

logger = get_logger(__name__)


@dataclass
class StepStats:
    """Full-batch loss and eV-scale error sums of one micro-step."""

    loss: float
    energy_abs_sum: float
    num_energies: float
    force_abs_sum: float = 0.0
    num_force_components: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.loss, self.energy_abs_sum, self.num_energies, self.force_abs_sum, self.num_force_components]
        )

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "StepStats":
        return cls(*(float(v) for v in vector))


def shard_indices(indices: Sequence[int], world_size: int) -> List[List[int]]:
    """Contiguous shards of ``len(indices) // world_size``; the last takes the rest."""
    indices = list(indices)
    size = len(indices) // world_size
    shards = [indices[k * size : (k + 1) * size] for k in range(world_size - 1)]
    shards.append(indices[(world_size - 1) * size :])
    return shards


def shard_step(
    model: EnergyModel,
    params: Mapping[str, np.ndarray],
    dataset: TaskDataset,
    indices: Sequence[int],
    shard: Sequence[int],
    world_size: int,
    normalizer: Normalizer,
) -> Tuple[Dict[str, np.ndarray], StepStats]:
    """
    Gradients and stats of one shard, scaled so the mean over the
    ``world_size`` shards equals the full-batch result.
    """
    if not shard:
        zeros = {name: np.zeros_like(value) for name, value in params.items()}
        return zeros, StepStats(0.0, 0.0, 0.0)
    total_graphs = len(indices)
    total_atoms = sum(dataset.structures[i].num_atoms for i in indices)
    shard_atoms = sum(dataset.structures[i].num_atoms for i in shard)
    batch = dataset.batch(shard)
    grads, result = parameter_gradients(
        model,
        params,
        batch,
        dataset.task,
        normalizer,
        energy_scale=world_size * len(shard) / total_graphs,
        force_scale=world_size * shard_atoms / total_atoms,
    )
    stats = StepStats(
        loss=result.loss_value,
        energy_abs_sum=result.energy_abs_sum,
        num_energies=result.num_energies,
        force_abs_sum=result.force_abs_sum,
        num_force_components=result.num_force_components,
    )
    return grads, stats


def _merge(stats: Sequence[StepStats]) -> StepStats:
    return StepStats(
        loss=float(np.mean([s.loss for s in stats])),
        energy_abs_sum=sum(s.energy_abs_sum for s in stats),
        num_energies=sum(s.num_energies for s in stats),
        force_abs_sum=sum(s.force_abs_sum for s in stats),
        num_force_components=sum(s.num_force_components for s in stats),
    )


class Strategy:
    """Base strategy: one worker, coordinator only."""

    name = "single"

    def __init__(self, world_size: int = 1):
        self.world_size = world_size
        self.rank = 0

    @property
    def is_coordinator(self) -> bool:
        return self.rank == 0

    def compute(
        self,
        model: EnergyModel,
        params: Mapping[str, np.ndarray],
        dataset: TaskDataset,
        indices: Sequence[int],
        normalizer: Normalizer,
    ) -> Tuple[Dict[str, np.ndarray], StepStats]:
        return shard_step(model, params, dataset, indices, list(indices), 1, normalizer)

    def agree_stop(self, flag: bool) -> bool:
        """Coordinator's stop decision, visible to every rank."""
        return flag

    def teardown(self):
        pass


class SingleStrategy(Strategy):
    name = "single"


class ThreadedDDPStrategy(Strategy):
    name = "threaded-ddp"

    def __init__(self, world_size: int):
        super().__init__(world_size)
        self._pool = ThreadPoolExecutor(max_workers=world_size, thread_name_prefix="ddp-worker")

    def compute(self, model, params, dataset, indices, normalizer):
        shards = shard_indices(indices, self.world_size)

        def work(rank: int):
            set_worker_rank(rank)
            return shard_step(model, params, dataset, indices, shards[rank], self.world_size, normalizer)

        futures = [self._pool.submit(work, rank) for rank in range(self.world_size)]
        results = []
        for rank, future in enumerate(futures):
            try:
                results.append(future.result())
            except AdsorbKitError:
                raise
            except Exception as e:
                raise WorkerError(f"Worker thread failed: {e}", rank=rank) from e
        grads = allreduce_mean([g for g, _ in results])
        return grads, _merge([s for _, s in results])

    def teardown(self):
        self._pool.shutdown(wait=True)


class ProcessDDPStrategy(Strategy):
    """
    Ring all-reduce across processes.

    The gradient vector carries five trailing stat slots (pre-multiplied by
    the world size, except the loss) so one ring pass averages both.
    """

    name = "process-ddp"

    def __init__(self, world_size: int, rank: int = 0, member: Optional[RingMember] = None):
        super().__init__(world_size)
        self.rank = rank
        self.member = member
        self.processes: List[mp.Process] = []
        self.pipes = []
        self._layout: Optional[GradientLayout] = None

    # -- coordinator side ----------------------------------------------------
    def launch(self, payload: Dict[str, Any], timeout: float = DEFAULT_PEER_TIMEOUT):
        """Spawn ranks 1..W-1 and wire everyone into the ring."""
        ctx = mp.get_context("spawn")
        self.member = RingMember.bind(0, self.world_size, timeout)
        for rank in range(1, self.world_size):
            parent, child = ctx.Pipe()
            process = ctx.Process(
                target=process_worker_main,
                args=(rank, self.world_size, child, payload, timeout),
                name=f"adsorbkit-rank{rank}",
                daemon=True,
            )
            process.start()
            self.processes.append(process)
            self.pipes.append(parent)

        ports = [self.member.port]
        for rank, pipe in enumerate(self.pipes, start=1):
            if not pipe.poll(timeout):
                self._abort()
                raise WorkerError("Worker never reported its ring port", rank=rank)
            message = pipe.recv()
            if message[0] != "port":
                self._abort()
                raise WorkerError(f"Worker failed during start-up: {message[1]}", rank=rank)
            ports.append(message[1])
        for pipe in self.pipes:
            pipe.send(("ports", ports))
        self.member.connect(ports)
        logger.info(f"process-ddp ring up with {self.world_size} ranks")

    def _worker_failure(self) -> Optional[WorkerError]:
        for rank, (process, pipe) in enumerate(zip(self.processes, self.pipes), start=1):
            if pipe.poll():
                message = pipe.recv()
                if message[0] == "error":
                    return WorkerError(f"Worker crashed: {message[1]}", rank=rank)
            if process.exitcode not in (None, 0):
                return WorkerError("Worker exited unexpectedly", rank=rank, details={"exitcode": process.exitcode})
        return None

    def _abort(self):
        for process in self.processes:
            if process.is_alive():
                process.terminate()
        for process in self.processes:
            process.join(timeout=5)
        if self.member is not None:
            self.member.close()

    # -- every rank ------------------------------------------------------------
    def _ring_mean(self, vector: np.ndarray) -> np.ndarray:
        try:
            return self.member.allreduce_mean(vector)
        except CommunicationError as e:
            if self.is_coordinator:
                failure = self._worker_failure()
                self._abort()
                if failure is not None:
                    raise failure from e
            raise

    def compute(self, model, params, dataset, indices, normalizer):
        shards = shard_indices(indices, self.world_size)
        grads, stats = shard_step(
            model, params, dataset, indices, shards[self.rank], self.world_size, normalizer
        )
        if self._layout is None:
            self._layout = GradientLayout.of(grads)
        packed = stats.as_vector()
        packed[1:] *= self.world_size
        vector = np.concatenate([self._layout.flatten(grads), packed])
        reduced = self._ring_mean(vector)
        size = self._layout.size
        return self._layout.unflatten(reduced[:size]), StepStats.from_vector(reduced[size:])

    def agree_stop(self, flag: bool) -> bool:
        vote = float(self.world_size) if (self.is_coordinator and flag) else 0.0
        return bool(self._ring_mean(np.array([vote]))[0] > 0.5)

    def teardown(self):
        if not self.is_coordinator:
            if self.member is not None:
                self.member.close()
            return
        for rank, (process, pipe) in enumerate(zip(self.processes, self.pipes), start=1):
            process.join(timeout=DEFAULT_PEER_TIMEOUT)
            if process.is_alive():
                logger.warning(f"Rank {rank} did not exit, terminating")
                process.terminate()
                process.join(timeout=5)
        if self.member is not None:
            self.member.close()


def process_worker_main(rank: int, world_size: int, conn, payload: Dict[str, Any], timeout: float):
    """Entry point of a spawned process-ddp rank."""
    setup_logging(log_level=payload.get("log_level", "WARNING"))
    set_worker_rank(rank, process_wide=True)
    member = None
    try:
        member = RingMember.bind(rank, world_size, timeout)
        conn.send(("port", member.port))
        if not conn.poll(timeout):
            raise CommunicationError("Coordinator never sent the ring ports")
        _, ports = conn.recv()
        member.connect(ports)

        from .trainer import Trainer

        strategy = ProcessDDPStrategy(world_size, rank=rank, member=member)
        Trainer.run_worker(payload, strategy)
        conn.send(("done", None))
    except BaseException as e:  # noqa: BLE001
        detail = f"{type(e).__name__}: {e}"
        get_logger(__name__).error(f"Rank {rank} failed: {detail}\n{traceback.format_exc()}")
        try:
            conn.send(("error", detail))
        except OSError:
            pass
        raise SystemExit(1)
    finally:
        if member is not None:
            member.close()


def build_strategy(name: str, devices: int) -> Strategy:
    if name == "single":
        return SingleStrategy(1)
    if name == "threaded-ddp":
        return ThreadedDDPStrategy(devices)
    if name == "process-ddp":
        return ProcessDDPStrategy(devices)
    raise CommunicationError(f"Unknown strategy '{name}'")


__all__ = [
    "StepStats",
    "Strategy",
    "SingleStrategy",
    "ThreadedDDPStrategy",
    "ProcessDDPStrategy",
    "shard_indices",
    "shard_step",
    "build_strategy",
    "process_worker_main",
]
