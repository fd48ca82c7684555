"""Comparison policies. Each is a callable ``policy(env) -> ActionPlan`` invoked
by :meth:`VehicularEnv.step` after the slot's arrivals.

Every baseline varies one dimension of the decision and fills in the rest
with the same fixed rules: execute where the estimated energy is lowest,
and share the band evenly through the regular bandwidth normalization.
"""

from __future__ import annotations

import numpy as np

from . import link
from .env import ActionPlan, VehicularEnv, masked_argmax
from .execution import DEFER, LOCAL
from .tasks import NO_TASK


def estimated_costs(env: VehicularEnv, mask: np.ndarray) -> np.ndarray:
    """Energy estimate per (vehicle, choice); inf where disallowed or over the slot.

    Assumes every vehicle with a pending task offloads, so band and server
    CPU are split that many ways.
    """
    cfg = env.config
    N, M = env.n_vehicles, env.n_uavs
    tau = cfg.world.slot_length
    costs = np.full((N, M + 2), np.inf)
    has = env.heads != NO_TASK
    k = max(int(has.sum()), 1)
    w = np.where(has, env.heads, 0)
    z = env.catalog.cycles[w]
    s = env.catalog.task_bits[w]
    local_ok = z / env.local_freq <= tau
    costs[:, LOCAL] = np.where(local_ok, cfg.compute.energy_coeff * env.local_freq**2 * z, np.inf)
    gain_uav, gain_bs = env.channel_gains()
    gains = np.concatenate([gain_uav, gain_bs[:, None]], axis=1)
    r = link.rate(cfg.channel.bandwidth / k, gains, cfg.channel)
    tx = s[:, None] / r
    run = z[:, None] / (env.server_freq[None, :] / k)
    costs[:, 1:] = np.where(tx + run <= tau, cfg.channel.tx_power * tx, np.inf)
    costs[~mask] = np.inf
    return costs


def greedy_execution(env: VehicularEnv, next_c_veh, next_c_uav) -> tuple[np.ndarray, int]:
    costs = estimated_costs(env, env.feasible_choices(next_c_veh, next_c_uav))
    choice = np.argmin(costs, axis=1)
    choice[~np.isfinite(costs.min(axis=1))] = DEFER
    return choice, 0


def _plan(env: VehicularEnv, refresh, choice, masked, weights=None) -> ActionPlan:
    return ActionPlan(refresh, choice, env.allocate_bandwidth(choice, weights), env.heads.copy(), masked)


def _random_subsets(rng: np.random.Generator, rows: int, n_tasks: int, k: int) -> np.ndarray:
    keys = rng.random((rows, n_tasks))
    mask = np.zeros((rows, n_tasks), dtype=bool)
    np.put_along_axis(mask, np.argsort(keys, axis=1)[:, : min(k, n_tasks)], True, axis=1)
    return mask


def _popular_sets(env: VehicularEnv) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-env.catalog.popularity, kind="stable")
    W = env.n_tasks
    veh = np.zeros((env.n_vehicles, W), dtype=bool)
    uav = np.zeros((env.n_uavs, W), dtype=bool)
    veh[:, order[: env.config.cache.vehicle_slots]] = True
    uav[:, order[: env.config.cache.uav_slots]] = True
    return veh, uav


def random_refresh(env: VehicularEnv, rng: np.random.Generator) -> ActionPlan:
    """Cache a uniformly random full set at every node each slot."""
    cc = env.config.cache
    veh = _random_subsets(rng, env.n_vehicles, env.n_tasks, cc.vehicle_slots)
    uav = _random_subsets(rng, env.n_uavs, env.n_tasks, cc.uav_slots)
    choice, masked = greedy_execution(env, veh, uav)
    return _plan(env, env.refresh_plan(veh, uav), choice, masked)


def popular_refresh(env: VehicularEnv, rng: np.random.Generator | None = None) -> ActionPlan:
    """Cache the most popular tasks, re-fetching them every ``popular_period`` slots."""
    veh, uav = _popular_sets(env)
    due = env.t % env.config.experiment.popular_period == 0
    refresh = env.refresh_plan(veh, uav, force_veh=veh if due else None, force_uav=uav if due else None)
    choice, masked = greedy_execution(env, veh, uav)
    return _plan(env, refresh, choice, masked)


def random_offload(env: VehicularEnv, rng: np.random.Generator) -> ActionPlan:
    """Popular caching; destination drawn uniformly, waiting when its data is unavailable."""
    veh, uav = _popular_sets(env)
    due = env.t % env.config.experiment.popular_period == 0
    refresh = env.refresh_plan(veh, uav, force_veh=veh if due else None, force_uav=uav if due else None)
    mask = env.feasible_choices(veh, uav)
    drawn = rng.integers(0, env.n_uavs + 2, env.n_vehicles)
    active = env.heads != NO_TASK
    ok = mask[np.arange(env.n_vehicles), drawn]
    choice = np.where(active & ok, drawn, DEFER)
    return _plan(env, refresh, choice, int(np.count_nonzero(active & ~ok)))


def equal_bandwidth(env: VehicularEnv, agent) -> ActionPlan:
    """The trained agent's decisions with the band split evenly among offloaders."""
    plan = env.decode_action(agent.act(env.encode_state()))
    plan.bandwidth = env.allocate_bandwidth(plan.choice)
    return plan


def agent_policy(agent):
    """Noise-free agent as a policy callable, for evaluation alongside the baselines."""
    def policy(env: VehicularEnv) -> ActionPlan:
        return env.decode_action(agent.act(env.encode_state()))
    return policy


def make_policy(name: str, rng: np.random.Generator, agent=None):
    if name == "random-refresh":
        return lambda env: random_refresh(env, rng)
    if name == "random-offload":
        return lambda env: random_offload(env, rng)
    if name == "popular-refresh":
        return lambda env: popular_refresh(env, rng)
    if name == "equal-bandwidth":
        if agent is None:
            raise ValueError("equal-bandwidth needs a trained agent")
        return lambda env: equal_bandwidth(env, agent)
    if name == "ddpg":
        if agent is None:
            raise ValueError("ddpg evaluation needs a trained agent")
        return agent_policy(agent)
    raise ValueError(f"unknown policy {name!r}")
