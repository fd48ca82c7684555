"""Experiment orchestration: training loop, policy rollouts, metrics files, sweeps."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .agent import DdpgAgent, OuNoise, SplitReplay, Transition
from .baselines import make_policy
from .config import AGENTS, ConfigError, ExperimentConfig
from .env import StepOutcome, VehicularEnv
from .rng import substream

log = logging.getLogger(__name__)


@dataclass
class MetricsRow:
    episode: int
    step: int
    reward: float
    energy_total: float
    energy_cache: float
    energy_local: float
    energy_offload: float
    mean_status_age: float
    age_violations: int
    deferrals: int

    @classmethod
    def from_outcome(cls, episode: int, step: int, out: StepOutcome) -> "MetricsRow":
        return cls(episode, step, float(out.reward), float(out.energy_total), float(out.energy_cache),
                   float(out.energy_local), float(out.energy_offload), float(out.mean_status_age),
                   int(out.age_violations), int(out.deferrals))


METRICS_FIELDS = list(MetricsRow.__dataclass_fields__)
EPISODE_FIELDS = ["episode", "steps", "mean_reward", "mean_energy", "mean_status_age",
                  "age_violations", "deferrals", "threshold"]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class CsvSink:
    """CSV writer with a fixed header, '\\n' line endings and round-trip float text."""

    def __init__(self, path: str | Path | None, fields: list[str]):
        self.fields = fields
        self.fh = None
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self.fh = open(path, "w", encoding="utf-8", newline="")
            self.writer = csv.writer(self.fh, lineterminator="\n")
            self.writer.writerow(fields)

    def write(self, row: dict) -> None:
        if self.fh is not None:
            self.writer.writerow([_fmt(row[f]) for f in self.fields])

    def close(self) -> None:
        if self.fh is not None:
            self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def summary_path(metrics_path: str | Path) -> Path:
    p = Path(metrics_path)
    return p.with_name(p.stem + ".episodes.csv")


def _episode_summary(episode: int, rows: list[MetricsRow], threshold) -> dict:
    return {
        "episode": episode,
        "steps": len(rows),
        "mean_reward": float(np.mean([r.reward for r in rows])) if rows else 0.0,
        "mean_energy": float(np.mean([r.energy_total for r in rows])) if rows else 0.0,
        "mean_status_age": float(np.mean([r.mean_status_age for r in rows])) if rows else 0.0,
        "age_violations": sum(r.age_violations for r in rows),
        "deferrals": sum(r.deferrals for r in rows),
        "threshold": "" if threshold is None else float(threshold),
    }


def build_agent(config: ExperimentConfig, env: VehicularEnv):
    seed = config.experiment.seed
    agent = DdpgAgent(env.state_dim, env.action_dim, config.agent, rng=substream(seed, "network_init"))
    rc = config.replay
    replay = SplitReplay(
        env.state_dim, env.action_dim, config.env.steps_per_episode,
        capacity=rc.capacity, batch_size=config.agent.batch_size,
        negative_fraction=rc.negative_fraction, step_fraction=rc.step_fraction,
        differentiated=rc.differentiated, threshold=rc.threshold,
        threshold_quantile=rc.threshold_quantile, threshold_window=rc.threshold_window,
        invert_split=rc.invert_split, rng=substream(seed, "replay"),
    )
    ac = config.agent
    noise = OuNoise(env.action_dim, theta=ac.ou_theta, sigma=ac.ou_sigma, sigma_decay=ac.ou_sigma_decay,
                    rng=substream(seed, "noise"))
    return agent, replay, noise


def train(config: ExperimentConfig, metrics_path=None, agent: DdpgAgent | None = None,
          keep_sampling_log: bool = False, on_episode: Callable[[dict], None] | None = None):
    """Run the DDPG training loop for ``experiment.episodes`` episodes.

    Returns ``(agent, episode_summaries, replay)``.
    """
    env = VehicularEnv(config)
    fresh, replay, noise = build_agent(config, env)
    agent = agent or fresh
    replay.log = [] if keep_sampling_log else None
    steps = config.env.steps_per_episode
    summaries = []
    with CsvSink(metrics_path, METRICS_FIELDS) as sink, \
            CsvSink(summary_path(metrics_path) if metrics_path else None, EPISODE_FIELDS) as ep_sink:
        for episode in range(config.experiment.episodes):
            state = env.reset() if episode else env.encode_state()
            noise.reset()
            rows = []
            for step in range(steps):
                action = agent.act(state, noise)
                out = env.step(action)
                replay.store(Transition(state, action, out.reward, out.state))
                batch = replay.sample(step)
                if batch is not None:
                    agent.train_step(batch)
                row = MetricsRow.from_outcome(episode, step, out)
                sink.write(asdict(row))
                rows.append(row)
                state = out.state
            summary = _episode_summary(episode, rows, replay.threshold)
            replay.end_episode()
            noise.decay()
            ep_sink.write(summary)
            summaries.append(summary)
            if on_episode is not None:
                on_episode(summary)
            log.info("episode %d reward %.4f energy %.5f", episode, summary["mean_reward"], summary["mean_energy"])
    return agent, summaries, replay


def rollout(config: ExperimentConfig, policy_name: str, agent: DdpgAgent | None = None,
            episodes: int | None = None, metrics_path=None) -> list[dict]:
    """Run a fixed policy (no learning) and return per-episode summaries."""
    env = VehicularEnv(config)
    policy = make_policy(policy_name, substream(config.experiment.seed, "policy"), agent)
    episodes = config.experiment.episodes if episodes is None else episodes
    summaries = []
    with CsvSink(metrics_path, METRICS_FIELDS) as sink, \
            CsvSink(summary_path(metrics_path) if metrics_path else None, EPISODE_FIELDS) as ep_sink:
        for episode in range(episodes):
            if episode:
                env.reset()
            rows = []
            for step in range(config.env.steps_per_episode):
                row = MetricsRow.from_outcome(episode, step, env.step(policy))
                sink.write(asdict(row))
                rows.append(row)
            summary = _episode_summary(episode, rows, None)
            ep_sink.write(summary)
            summaries.append(summary)
    return summaries


def run(config: ExperimentConfig, out, load: str | Path | None = None, save: str | Path | None = None,
        sampling_log: str | Path | None = None) -> list[dict]:
    """Write the metrics file (and episode summary) for one configured agent."""
    name = config.experiment.agent
    agent = None
    if load is not None:
        agent, _ = DdpgAgent.load(load)
    if name == "ddpg":
        agent, summaries, replay = train(config, out, agent, keep_sampling_log=sampling_log is not None)
        if sampling_log is not None:
            with CsvSink(sampling_log, ["record", "step", "n_negative", "n_positive", "differentiated", "negatives_stored"]) as sink:
                for k, rec in enumerate(replay.log):
                    sink.write({"record": k, **asdict(rec)})
        if save is not None:
            agent.save(save, {"seed": config.experiment.seed, "episodes": config.experiment.episodes})
        return summaries
    if name == "equal-bandwidth" and agent is None:
        raise ConfigError("equal-bandwidth replays a trained agent: pass a checkpoint to load")
    return rollout(config, name, agent, metrics_path=out)


def mean_energy_from_metrics(path: str | Path) -> float:
    with open(path, encoding="utf-8") as fh:
        values = [float(r["energy_total"]) for r in csv.DictReader(fh)]
    return float(np.mean(values)) if values else 0.0


SWEEP_FIELDS = ["n_vehicles", "seed", "agent", "mean_energy", "mean_reward", "mean_status_age", "metrics"]


def sweep_cell(config: ExperimentConfig, n_vehicles: int, seed: int, out_dir: str | Path,
               agents: Iterable[str] = AGENTS) -> list[dict]:
    """Train one agent for (N, seed) if needed, then evaluate every requested policy."""
    out_dir = Path(out_dir)
    cfg = config.replace(**{"experiment.n_vehicles": n_vehicles, "experiment.seed": seed})
    agents = list(agents)
    trained = None
    if any(a in ("ddpg", "equal-bandwidth") for a in agents):
        trained, _, _ = train(cfg, out_dir / f"train_N{n_vehicles}_s{seed}.csv")
    rows = []
    for name in agents:
        path = out_dir / f"eval_N{n_vehicles}_s{seed}_{name}.csv"
        summaries = rollout(cfg, name, trained, episodes=cfg.experiment.eval_episodes, metrics_path=path)
        rows.append({
            "n_vehicles": n_vehicles,
            "seed": seed,
            "agent": name,
            "mean_energy": mean_energy_from_metrics(path),
            "mean_reward": float(np.mean([s["mean_reward"] for s in summaries])) if summaries else 0.0,
            "mean_status_age": float(np.mean([s["mean_status_age"] for s in summaries])) if summaries else 0.0,
            "metrics": path.name,
        })
    return rows


def _cell(args):
    return sweep_cell(*args)


def sweep(config: ExperimentConfig, vehicle_counts, seeds, out_dir, agents: Iterable[str] = AGENTS,
          jobs: int = 1) -> Path:
    """Evaluate every (N, seed, agent) combination; returns the summary CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(config, n, s, out_dir, tuple(agents)) for n in vehicle_counts for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    summary = out_dir / "summary.csv"
    with CsvSink(summary, SWEEP_FIELDS) as sink:
        for rows in results:
            for row in rows:
                sink.write(row)
    return summary


def episodes_to_reach(episode_rewards, fraction: float = 0.95, final_window: int = 100, smooth: int = 10) -> int:
    """First episode whose trailing ``smooth``-episode mean reaches ``fraction`` of the final mean.

    The final mean is taken over the last ``final_window`` episodes. Returns
    ``len(episode_rewards)`` when the level is never reached.
    """
    r = np.asarray(episode_rewards, dtype=float)
    target = fraction * r[-final_window:].mean()
    if target < 0:
        # for negative levels "95% of" means within 5% above it
        target = r[-final_window:].mean() * (2.0 - fraction)
    csum = np.cumsum(np.insert(r, 0, 0.0))
    for k in range(len(r)):
        lo = max(0, k + 1 - smooth)
        if (csum[k + 1] - csum[lo]) / (k + 1 - lo) >= target:
            return k
    return len(r)


def parse_int_list(text: str) -> list[int]:
    """``"10,20,30"`` or ``"1..5"`` (inclusive) or a mix of both."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty list: {text!r}")
    return out


