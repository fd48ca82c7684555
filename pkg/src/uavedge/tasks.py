"""Task generation, per-vehicle task buffers and the age of status updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NO_TASK = -1


@dataclass
class TaskCatalog:
    """Per task type: input-data bits ``l``, upload bits ``s`` and CPU cycles ``z``."""

    data_bits: np.ndarray
    task_bits: np.ndarray
    cycles: np.ndarray
    popularity: np.ndarray

    @property
    def n_tasks(self) -> int:
        return len(self.cycles)

    @classmethod
    def draw(cls, cfg, n_tasks: int, rng: np.random.Generator) -> "TaskCatalog":
        return cls(
            data_bits=rng.uniform(*cfg.data_bits, n_tasks),
            task_bits=rng.uniform(*cfg.task_bits, n_tasks),
            cycles=rng.uniform(*cfg.cycles, n_tasks),
            popularity=zipf_probabilities(n_tasks, cfg.zipf_exponent),
        )


@dataclass
class TaskBuffer:
    """``pending[i, w]`` marks a buffered task of type w at vehicle i, generated at ``gen_time[i, w]``."""

    pending: np.ndarray
    gen_time: np.ndarray

    @classmethod
    def empty(cls, n_vehicles: int, n_tasks: int) -> "TaskBuffer":
        return cls(np.zeros((n_vehicles, n_tasks), dtype=bool), np.zeros((n_vehicles, n_tasks), dtype=np.int64))

    def copy(self) -> "TaskBuffer":
        return TaskBuffer(self.pending.copy(), self.gen_time.copy())


def zipf_probabilities(n_tasks: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, n_tasks + 1, dtype=float) ** -exponent
    return weights / weights.sum()


def sample_arrivals(
    rng: np.random.Generator, buffers: TaskBuffer, t: int, arrival_prob: float, popularity: np.ndarray
) -> TaskBuffer:
    """Bernoulli arrival per vehicle with a Zipf-distributed type; duplicates of a buffered type are dropped.

    Both draws are taken for every vehicle every slot so the stream position
    never depends on the buffer contents.
    """
    n = buffers.pending.shape[0]
    arrive = rng.random(n) < arrival_prob
    # inverse-CDF draw, the same stream Generator.choice(p=...) consumes
    cdf = np.cumsum(popularity)
    kinds = np.searchsorted(cdf / cdf[-1], rng.random(n), side="right")
    out = buffers.copy()
    rows = np.arange(n)
    new = arrive & ~out.pending[rows, kinds]
    out.pending[rows[new], kinds[new]] = True
    out.gen_time[rows[new], kinds[new]] = t
    return out


def head_task(buffers: TaskBuffer, vehicle: int, t: int) -> int | None:
    """Oldest pending task type at ``vehicle``; ties go to the lowest type index."""
    pending = np.flatnonzero(buffers.pending[vehicle])
    if pending.size == 0:
        return None
    ages = t - buffers.gen_time[vehicle, pending]
    return int(pending[np.argmax(ages)])


def head_tasks(buffers: TaskBuffer, t: int) -> np.ndarray:
    """Head task per vehicle, :data:`NO_TASK` for empty buffers."""
    key = np.where(buffers.pending, t - buffers.gen_time, -1)
    heads = key.argmax(axis=1)
    heads[~buffers.pending.any(axis=1)] = NO_TASK
    return heads


def complete_task(status: np.ndarray, buffers: TaskBuffer, vehicle: int, task: int, t: int, data_age: int):
    """Record an executed task: status age becomes system time plus the age of the data used."""
    status = status.copy()
    buffers = buffers.copy()
    status[vehicle] = (t - buffers.gen_time[vehicle, task]) + data_age
    buffers.pending[vehicle, task] = False
    return status, buffers


def complete_tasks(status: np.ndarray, buffers: TaskBuffer, vehicles, task_ids, t: int, data_ages):
    """:func:`complete_task` for several distinct vehicles at once."""
    vehicles = np.asarray(vehicles, dtype=np.int64)
    task_ids = np.asarray(task_ids, dtype=np.int64)
    if vehicles.size and np.bincount(vehicles).max() > 1:
        raise ValueError("a vehicle can complete at most one task per slot")
    status = status.copy()
    buffers = buffers.copy()
    status[vehicles] = (t - buffers.gen_time[vehicles, task_ids]) + np.asarray(data_ages, dtype=np.int64)
    buffers.pending[vehicles, task_ids] = False
    return status, buffers


def idle_tick(status: np.ndarray, vehicles=None) -> np.ndarray:
    """Age every listed vehicle's status by one slot (all vehicles by default)."""
    out = status.copy()
    if vehicles is None:
        out += 1
    else:
        out[vehicles] += 1
    return out


def threshold_violations(status: np.ndarray, age_threshold: int) -> int:
    return int(np.count_nonzero(np.asarray(status) > age_threshold))
