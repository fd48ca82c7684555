"""Cached input data at vehicles and UAVs: indicators, ages, refreshes, energy.

Ages are integer slot counts. An uncached entry holds the :data:`UNCACHED`
marker instead of a number; the base station always serves age-0 data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNCACHED = -1
BS_AGE = 0


class ConstraintError(ValueError):
    """A plan breaks a caching constraint; ``where`` names the offending entry."""

    def __init__(self, message: str, where: tuple | None = None):
        super().__init__(message)
        self.where = where


@dataclass
class CacheCatalog:
    data_bits: np.ndarray
    vehicle_capacity: np.ndarray
    uav_capacity: np.ndarray

    @classmethod
    def from_slots(cls, data_bits, n_vehicles: int, n_uavs: int, vehicle_slots: int = 1, uav_slots: int = 3):
        """Capacities sized so any ``k`` task datasets fit, ``k`` = slots per node."""
        data_bits = np.asarray(data_bits, dtype=float)
        biggest = float(data_bits.max())
        return cls(
            data_bits=data_bits,
            vehicle_capacity=np.full(n_vehicles, vehicle_slots * biggest),
            uav_capacity=np.full(n_uavs, uav_slots * biggest),
        )


@dataclass
class CacheState:
    c_veh: np.ndarray
    c_uav: np.ndarray
    age_veh: np.ndarray
    age_uav: np.ndarray

    @classmethod
    def empty(cls, n_vehicles: int, n_uavs: int, n_tasks: int) -> "CacheState":
        return cls(
            c_veh=np.zeros((n_vehicles, n_tasks), dtype=bool),
            c_uav=np.zeros((n_uavs, n_tasks), dtype=bool),
            age_veh=np.full((n_vehicles, n_tasks), UNCACHED, dtype=np.int64),
            age_uav=np.full((n_uavs, n_tasks), UNCACHED, dtype=np.int64),
        )

    def copy(self) -> "CacheState":
        return CacheState(self.c_veh.copy(), self.c_uav.copy(), self.age_veh.copy(), self.age_uav.copy())


@dataclass
class RefreshPlan:
    y_veh: np.ndarray
    y_uav: np.ndarray
    next_c_veh: np.ndarray
    next_c_uav: np.ndarray

    @classmethod
    def keep(cls, cache: CacheState) -> "RefreshPlan":
        """Keep everything, refresh nothing."""
        return cls(
            np.zeros_like(cache.c_veh), np.zeros_like(cache.c_uav), cache.c_veh.copy(), cache.c_uav.copy()
        )


def _evolve(age: np.ndarray, cached: np.ndarray, y: np.ndarray, next_c: np.ndarray, kind: str) -> np.ndarray:
    y = np.asarray(y, dtype=bool)
    next_c = np.asarray(next_c, dtype=bool)
    if (y & ~next_c).any() or (next_c & ~(y | cached)).any():
        bad = y & ~next_c
        if bad.any():
            i, w = map(int, np.argwhere(bad)[0])
            raise ConstraintError(f"{kind} {i}: refresh of task {w} that is not kept in cache", (kind, i, w))
        i, w = map(int, np.argwhere(next_c & ~y & ~cached)[0])
        raise ConstraintError(f"{kind} {i}: task {w} kept without ever being fetched", (kind, i, w))
    return np.where(next_c, np.where(y, 1, age + 1), UNCACHED)


def evolve_ages(cache: CacheState, plan: RefreshPlan) -> CacheState:
    """Apply one slot of refresh decisions: fetched -> 1, kept -> +1, dropped -> UNCACHED."""
    return CacheState(
        c_veh=np.asarray(plan.next_c_veh, dtype=bool).copy(),
        c_uav=np.asarray(plan.next_c_uav, dtype=bool).copy(),
        age_veh=_evolve(cache.age_veh, cache.c_veh, plan.y_veh, plan.next_c_veh, "vehicle"),
        age_uav=_evolve(cache.age_uav, cache.c_uav, plan.y_uav, plan.next_c_uav, "uav"),
    )


def check_capacity(plan: RefreshPlan, catalog: CacheCatalog) -> bool:
    veh_load = np.asarray(plan.next_c_veh, dtype=float) @ catalog.data_bits
    uav_load = np.asarray(plan.next_c_uav, dtype=float) @ catalog.data_bits
    return bool((veh_load <= catalog.vehicle_capacity).all() and (uav_load <= catalog.uav_capacity).all())


def refresh_energy(plan: RefreshPlan, catalog: CacheCatalog, fetch_energy: float) -> float:
    """Joules spent fetching every entry flagged for refresh this slot."""
    fetches = np.asarray(plan.y_veh).sum(axis=0) + np.asarray(plan.y_uav).sum(axis=0)
    return float(fetch_energy * (fetches @ catalog.data_bits))


def age_of(cache: CacheState, kind: str, node: int, task: int) -> int:
    """Age of the data for ``task`` at a node; ``kind`` is "vehicle", "uav" or "bs"."""
    n_tasks = cache.age_veh.shape[1]
    if not 0 <= task < n_tasks:
        raise LookupError(f"unknown task {task}")
    if kind == "bs":
        return BS_AGE
    table = {"vehicle": cache.age_veh, "uav": cache.age_uav}.get(kind)
    if table is None:
        raise LookupError(f"unknown node kind {kind!r}")
    if not 0 <= node < table.shape[0]:
        raise LookupError(f"unknown {kind} {node}")
    return int(table[node, task])
