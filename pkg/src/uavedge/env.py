"""The per-slot decision process: state encoding, action decoding, transitions, reward.

A raw action is a vector in ``[-1, 1]^D`` laid out as

* ``N*W`` vehicle cache logits, row per vehicle,
* ``M*W`` UAV cache logits, row per UAV,
* ``N*(M+2)`` execution logits per vehicle: local, UAV 1..M, base station,
* ``N`` bandwidth weights.

:meth:`VehicularEnv.decode_action` projects it onto a plan that satisfies the
capacity, single-choice, cache-availability, coverage and bandwidth
constraints; slot-time overruns are caught in :meth:`VehicularEnv.step` and
turned into deferrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import caching, link, tasks, world
from .caching import CacheCatalog, CacheState, RefreshPlan
from .config import ExperimentConfig
from .execution import DEFER, LOCAL, cpu_share, local_energy, local_time, mec_time, slot_feasible
from .rng import substream
from .tasks import NO_TASK, TaskBuffer, TaskCatalog


@dataclass
class ActionPlan:
    refresh: RefreshPlan
    choice: np.ndarray
    bandwidth: np.ndarray
    heads: np.ndarray
    masked: int = 0


@dataclass
class Completion:
    vehicle: int
    task: int
    gen_time: int
    choice: int


@dataclass
class StepOutcome:
    reward: float
    energy_cache: float
    energy_local: float
    energy_offload: float
    energy_total: float
    age_violations: int
    deferrals: int
    overflows: int
    mean_status_age: float
    state: np.ndarray
    plan: ActionPlan
    completions: list = field(default_factory=list)


Action = Union[np.ndarray, ActionPlan, Callable[["VehicularEnv"], ActionPlan]]


class VehicularEnv:
    """One UAV-assisted street segment, advanced one slot per :meth:`step`.

    The scenario (task catalog, vehicle CPU speeds) is drawn once from the
    seed; each :meth:`reset` without a seed starts a new episode on the same
    scenario with fresh positions and empty caches and buffers.
    """

    def __init__(self, config: ExperimentConfig, seed: int | None = None):
        self.config = config.validate()
        exp = config.experiment
        self.n_vehicles, self.n_uavs, self.n_tasks = exp.n_vehicles, exp.n_uavs, exp.n_tasks
        self.reset(exp.seed if seed is None else seed)

    # -- dimensions ---------------------------------------------------------
    @property
    def state_dim(self) -> int:
        N, M, W = self.n_vehicles, self.n_uavs, self.n_tasks
        return 2 * N + 2 * M + N * W + M * W + N

    @property
    def action_dim(self) -> int:
        N, M, W = self.n_vehicles, self.n_uavs, self.n_tasks
        return N * W + M * W + N * (M + 2) + N

    @property
    def energy_scale(self) -> float:
        return self.n_vehicles * self.config.env.energy_scale_per_vehicle

    # -- lifecycle ----------------------------------------------------------
    def reset(self, seed: int | None = None) -> np.ndarray:
        cfg = self.config
        N, M, W = self.n_vehicles, self.n_uavs, self.n_tasks
        if seed is not None:
            self.seed = int(seed)
            scenario = substream(seed, "scenario")
            self.mobility_rng = substream(seed, "mobility")
            self.arrival_rng = substream(seed, "arrivals")
            self.catalog = TaskCatalog.draw(cfg.tasks, W, scenario)
            self.cache_catalog = CacheCatalog.from_slots(
                self.catalog.data_bits, N, M, cfg.cache.vehicle_slots, cfg.cache.uav_slots
            )
            self.local_freq = scenario.uniform(*cfg.compute.local_freq, N)
            self.server_freq = np.concatenate([np.full(M, cfg.compute.uav_freq), [cfg.compute.bs_freq]])
        self.world = world.spawn_world(cfg.world, N, M, self.mobility_rng)
        self.cache = CacheState.empty(N, M, W)
        self.buffers = TaskBuffer.empty(N, W)
        self.status = np.zeros(N, dtype=np.int64)
        self.t = 0
        self.heads = np.full(N, NO_TASK)
        return self.encode_state()

    # -- observation --------------------------------------------------------
    def encode_state(self) -> np.ndarray:
        g = self.config.world
        cap = self.config.tasks.age_threshold + 1
        L, lane = g.street_length, max(g.lane_half_width, 1e-9)
        N, M = self.n_vehicles, self.n_uavs
        out = np.empty(self.state_dim)
        # positions interleave (x, y) per node
        out[0 : 2 * N : 2] = self.world.veh_x / L
        out[1 : 2 * N : 2] = (self.world.veh_y + lane) / (2 * lane)
        k = 2 * N
        out[k : k + 2 * M : 2] = self.world.uav_x / L
        out[k + 1 : k + 2 * M : 2] = (self.world.uav_y + lane) / (2 * lane)
        k += 2 * M
        # an uncached entry reads like data at or beyond the age cap
        for a in (self.cache.age_veh, self.cache.age_uav):
            out[k : k + a.size] = np.minimum(np.where(a == caching.UNCACHED, cap, a), cap).ravel()
            k += a.size
        out[k:] = np.minimum(self.status, cap)
        out[2 * N + 2 * M :] /= cap
        return out

    # -- projection helpers shared with the baselines -----------------------
    def coverage(self) -> np.ndarray:
        return world.coverage_matrix(self.world, self.config.world)

    def channel_gains(self) -> tuple[np.ndarray, np.ndarray]:
        """Vehicle-UAV gains (N, M) and vehicle-BS gains (N,); constant within a slot."""
        g, ch = self.config.world, self.config.channel
        d_uav = world.pair_distances(self.world, g)
        gain_uav = link.uav_channel_gain(d_uav, world.elevation_angle(d_uav, g.uav_height), ch) if self.n_uavs else d_uav
        return gain_uav, link.bs_channel_gain(world.bs_distances(self.world, g), ch)

    def refresh_plan(self, next_c_veh, next_c_uav, force_veh=None, force_uav=None) -> RefreshPlan:
        """Fetch whatever is newly cached, plus any kept entry flagged in ``force_*``."""
        next_c_veh = np.asarray(next_c_veh, dtype=bool)
        next_c_uav = np.asarray(next_c_uav, dtype=bool)
        y_veh = next_c_veh & ~self.cache.c_veh
        y_uav = next_c_uav & ~self.cache.c_uav
        if force_veh is not None:
            y_veh |= next_c_veh & np.asarray(force_veh, dtype=bool)
        if force_uav is not None:
            y_uav |= next_c_uav & np.asarray(force_uav, dtype=bool)
        return RefreshPlan(y_veh, y_uav, next_c_veh, next_c_uav)

    def feasible_choices(self, next_c_veh, next_c_uav) -> np.ndarray:
        """(N, M+2) mask of choices allowed by cache availability and coverage.

        Rows of vehicles without a pending task are all False.
        """
        N, M = self.n_vehicles, self.n_uavs
        mask = np.empty((N, M + 2), dtype=bool)
        has = self.heads != NO_TASK
        w = np.where(has, self.heads, 0)
        mask[:, LOCAL] = np.asarray(next_c_veh, dtype=bool)[np.arange(N), w]
        if M:
            mask[:, 1 : M + 1] = np.asarray(next_c_uav, dtype=bool)[:, w].T & self.coverage()
        mask[:, M + 1] = True
        mask &= has[:, None]
        return mask

    def allocate_bandwidth(self, choice: np.ndarray, weights=None) -> np.ndarray:
        """Split the band among offloading vehicles in proportion to ``weights`` in [-1, 1]."""
        N, M = self.n_vehicles, self.n_uavs
        B = self.config.channel.bandwidth
        alloc = np.zeros((N, M + 1))
        offl = np.flatnonzero(choice > LOCAL)
        if offl.size == 0:
            return alloc
        if weights is None:
            w = np.ones(offl.size)
        else:
            w = np.maximum((np.asarray(weights, dtype=float)[offl] + 1.0) / 2.0, 0.0)
        total = w.sum()
        if total <= 0:
            w, total = np.ones(offl.size), float(offl.size)
        alloc[offl, choice[offl] - 1] = B * w / total
        return alloc

    # -- decoding -----------------------------------------------------------
    def split_action(self, raw: np.ndarray):
        N, M, W = self.n_vehicles, self.n_uavs, self.n_tasks
        raw = np.asarray(raw, dtype=float)
        if raw.shape != (self.action_dim,):
            raise ValueError(f"raw action has shape {raw.shape}, expected ({self.action_dim},)")
        a, b, c = N * W, N * W + M * W, N * W + M * W + N * (M + 2)
        return raw[:a].reshape(N, W), raw[a:b].reshape(M, W), raw[b:c].reshape(N, M + 2), raw[c:]

    def decode_action(self, raw: np.ndarray) -> ActionPlan:
        v_log, u_log, e_log, bw = self.split_action(raw)
        ccfg, t_ref = self.config.cache, self.config.env.refresh_threshold
        next_c_veh = _top_k_mask(v_log, ccfg.vehicle_slots)
        next_c_uav = _top_k_mask(u_log, ccfg.uav_slots)
        refresh = self.refresh_plan(next_c_veh, next_c_uav, v_log > t_ref, u_log > t_ref)
        mask = self.feasible_choices(next_c_veh, next_c_uav)
        choice, masked = masked_argmax(e_log, mask, self.heads != NO_TASK)
        return ActionPlan(refresh, choice, self.allocate_bandwidth(choice, bw), self.heads.copy(), masked)

    # -- transition ---------------------------------------------------------
    def begin_slot(self) -> None:
        tc = self.config.tasks
        self.buffers = tasks.sample_arrivals(self.arrival_rng, self.buffers, self.t, tc.arrival_prob, self.catalog.popularity)
        self.heads = tasks.head_tasks(self.buffers, self.t)

    def step(self, action: Action) -> StepOutcome:
        cfg = self.config
        g, ch = cfg.world, cfg.channel
        N, M = self.n_vehicles, self.n_uavs
        t = self.t

        self.begin_slot()
        if isinstance(action, ActionPlan):
            plan = action
        elif callable(action):
            plan = action(self)
        else:
            plan = self.decode_action(action)

        overflows = 0 if caching.check_capacity(plan.refresh, self.cache_catalog) else 1
        e_cache = caching.refresh_energy(plan.refresh, self.cache_catalog, cfg.cache.fetch_energy)
        self.cache = caching.evolve_ages(self.cache, plan.refresh)

        gain_uav, gain_bs = self.channel_gains()
        choice, heads = plan.choice, plan.heads

        # every vehicle at once; rows of idle or deferred vehicles are ignored below
        rows = np.arange(N)
        attempt = choice != DEFER
        is_local = choice == LOCAL
        off = choice > LOCAL
        w = np.where(attempt, heads, 0)
        j = np.where(off, choice - 1, 0)
        z = self.catalog.cycles[w]
        counts = np.bincount(j[off], minlength=M + 1)
        share = np.ones(N)
        share[off] = cpu_share(self.server_freq[j[off]], counts[j[off]])
        run = np.where(is_local, local_time(z, self.local_freq), mec_time(z, share))

        to_uav = off & (j < M)
        ju = np.minimum(j, max(M - 1, 0))  # in-range UAV index, only read where to_uav holds
        gain = np.where(to_uav, gain_uav[rows, ju] if M else 0.0, gain_bs)
        r = link.rate(plan.bandwidth[rows, j], gain, ch)
        sent = r > 0
        tx = np.where(off, np.where(sent, self.catalog.task_bits[w] / np.where(sent, r, 1.0), np.inf), 0.0)
        energy = np.where(
            is_local, local_energy(z, self.local_freq, cfg.compute.energy_coeff), link.offload_energy(ch.tx_power, tx)
        )
        age = np.where(
            is_local,
            self.cache.age_veh[rows, w],
            np.where(to_uav, self.cache.age_uav[ju, w] if M else 0, caching.BS_AGE),
        )

        ok = attempt & slot_feasible(choice, tx, run, g.slot_length)
        deferrals = int(plan.masked) + int(np.count_nonzero(attempt & ~ok))
        e_loc = float(energy[ok & is_local].sum())
        e_off = float(energy[ok & off].sum())
        fin_veh, fin_task = rows[ok], w[ok]
        completions = [
            Completion(i, k, g_, ch_)
            for i, k, g_, ch_ in zip(
                fin_veh.tolist(), fin_task.tolist(), self.buffers.gen_time[fin_veh, fin_task].tolist(), choice[ok].tolist()
            )
        ]
        status, self.buffers = tasks.complete_tasks(self.status, self.buffers, fin_veh, fin_task, t, age[ok])
        self.status = tasks.idle_tick(status, ~ok)

        age_viol = tasks.threshold_violations(self.status, cfg.tasks.age_threshold)
        e_total = e_cache + e_loc + e_off
        penalty = (
            cfg.env.age_penalty * age_viol + cfg.env.defer_penalty * deferrals + cfg.env.overflow_penalty * overflows
        )
        reward = math.exp(-e_total / self.energy_scale) - penalty

        self.world = world.advance(self.world, g)
        self.t = t + 1
        return StepOutcome(
            reward=reward,
            energy_cache=e_cache,
            energy_local=e_loc,
            energy_offload=e_off,
            energy_total=e_total,
            age_violations=age_viol,
            deferrals=deferrals,
            overflows=overflows,
            mean_status_age=float(self.status.sum()) / N,
            state=self.encode_state(),
            plan=plan,
            completions=completions,
        )


def _top_k_mask(logits: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k largest entries per row; ties favour lower indices."""
    k = min(k, logits.shape[1])
    mask = np.zeros(logits.shape, dtype=bool)
    rows = np.arange(logits.shape[0])[:, None]
    if k == 1:
        mask[rows, logits.argmax(axis=1)[:, None]] = True
    else:
        mask[rows, np.argsort(-logits, axis=1, kind="stable")[:, :k]] = True
    return mask


def masked_argmax(logits: np.ndarray, mask: np.ndarray, active: np.ndarray):
    """Best allowed column per active row, DEFER when nothing is allowed.

    Returns the choices and how many active rows had their unmasked favourite
    blocked.
    """
    free = logits.argmax(axis=1)
    blocked = active & ~mask[np.arange(len(free)), free]
    choice = np.where(mask, logits, -np.inf).argmax(axis=1)
    choice[~mask.any(axis=1) | ~active] = DEFER
    return choice, int(np.count_nonzero(blocked))
