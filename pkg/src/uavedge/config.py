"""Experiment configuration: typed sections, flat dotted-key file format, validation.

A config file is plain text, one ``section.key = value`` per line::

    # two UAVs over a 500 m street
    experiment.n_vehicles = 10
    world.uav_height = 40.0
    agent.hidden = [256, 128]

Values are Python literals (numbers, booleans, lists, quoted strings); bare
words are read as strings. Unknown keys raise :class:`ConfigError`.
"""

from __future__ import annotations

import ast
import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Invalid configuration value or unknown key."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass
class GeometryConfig:
    street_length: float = 500.0
    uav_height: float = 40.0
    coverage_radius: float = 100.0
    bs_position: tuple = (250.0, 50.0, 25.0)
    slot_length: float = 0.1
    lane_half_width: float = 10.0
    vehicle_speed: tuple = (10.0, 20.0)
    uav_speed: float = 10.0

    def validate(self) -> None:
        _require(self.street_length > 0, "world.street_length must be > 0")
        _require(self.uav_height > 0, "world.uav_height must be > 0")
        _require(self.coverage_radius > 0, "world.coverage_radius must be > 0")
        _require(self.slot_length > 0, "world.slot_length must be > 0")
        _require(len(self.bs_position) == 3, "world.bs_position needs (x, y, z)")
        _require(self.lane_half_width >= 0, "world.lane_half_width must be >= 0")
        lo, hi = self.vehicle_speed
        _require(lo <= hi, "world.vehicle_speed must be (low, high)")


@dataclass
class ChannelConfig:
    carrier_frequency: float = 2e9
    pathloss_exponent: float = 2.0
    eta_los: float = 2.0
    eta_nlos: float = 200.0
    env_a: float = 9.61
    env_b: float = 0.16
    noise_power: float = 1e-13
    tx_power: float = 1.0
    bandwidth: float = 10e6

    @property
    def beta0(self) -> float:
        """Channel gain at 1 m, ``(4 pi f_c / c)^-alpha``."""
        return (4.0 * math.pi * self.carrier_frequency / SPEED_OF_LIGHT) ** (
            -self.pathloss_exponent
        )

    def validate(self) -> None:
        _require(self.eta_nlos > self.eta_los > 1, "channel: need eta_nlos > eta_los > 1")
        _require(self.bandwidth > 0, "channel.bandwidth must be > 0")
        _require(self.noise_power > 0, "channel.noise_power must be > 0")
        _require(self.tx_power > 0, "channel.tx_power must be > 0")
        _require(self.carrier_frequency > 0, "channel.carrier_frequency must be > 0")


SPEED_OF_LIGHT = 299_792_458.0


@dataclass
class ComputeConfig:
    local_freq: tuple = (4.5e8, 5.5e8)
    uav_freq: float = 3e9
    bs_freq: float = 1e10
    energy_coeff: float = 1e-27

    def validate(self) -> None:
        lo, hi = self.local_freq
        _require(0 < lo <= hi, "compute.local_freq must be (low, high) > 0")
        _require(self.uav_freq > 0 and self.bs_freq > 0, "compute: server freqs must be > 0")
        _require(self.energy_coeff > 0, "compute.energy_coeff must be > 0")


@dataclass
class TaskConfig:
    arrival_prob: float = 0.3
    zipf_exponent: float = 1.0
    task_bits: tuple = (100e3, 150e3)
    cycles: tuple = (1e7, 1.5e7)
    data_bits: tuple = (1e6, 4e6)
    age_threshold: int = 20

    def validate(self) -> None:
        _require(0.0 <= self.arrival_prob <= 1.0, "tasks.arrival_prob must be in [0, 1]")
        _require(self.zipf_exponent >= 0, "tasks.zipf_exponent must be >= 0")
        for name in ("task_bits", "cycles", "data_bits"):
            lo, hi = getattr(self, name)
            _require(0 < lo <= hi, f"tasks.{name} must be (low, high) > 0")
        _require(self.age_threshold >= 1, "tasks.age_threshold must be >= 1")


@dataclass
class CacheConfig:
    fetch_energy: float = 1e-8
    vehicle_slots: int = 1
    uav_slots: int = 3

    def validate(self) -> None:
        _require(self.fetch_energy >= 0, "cache.fetch_energy must be >= 0")
        _require(self.vehicle_slots >= 1 and self.uav_slots >= 1, "cache slots must be >= 1")


@dataclass
class EnvConfig:
    steps_per_episode: int = 100
    # reward reference energy per vehicle: one average data fetch (1e-8 J/bit * 2.5 Mbit)
    energy_scale_per_vehicle: float = 2.5e-2
    age_penalty: float = 1.0
    defer_penalty: float = 0.5
    overflow_penalty: float = 1.0
    refresh_threshold: float = 0.5

    def validate(self) -> None:
        _require(self.steps_per_episode >= 1, "env.steps_per_episode must be >= 1")
        _require(self.energy_scale_per_vehicle > 0, "env.energy_scale_per_vehicle must be > 0")
        _require(self.age_penalty >= 0 and self.defer_penalty >= 0, "env penalties must be >= 0")


@dataclass
class AgentConfig:
    hidden: tuple = (256, 128)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.95
    tau: float = 0.005
    batch_size: int = 64
    optimizer: str = "sgd"
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    ou_sigma_decay: float = 0.995

    def validate(self) -> None:
        _require(self.actor_lr > 0 and self.critic_lr > 0, "agent learning rates must be > 0")
        _require(0 < self.gamma < 1, "agent.gamma must be in (0, 1)")
        _require(0 < self.tau < 1, "agent.tau must be in (0, 1)")
        _require(self.batch_size >= 1, "agent.batch_size must be >= 1")
        _require(self.optimizer in ("sgd", "adam"), "agent.optimizer must be sgd or adam")
        _require(all(int(h) >= 1 for h in self.hidden), "agent.hidden sizes must be >= 1")
        _require(self.ou_sigma >= 0, "agent.ou_sigma must be >= 0")


@dataclass
class ReplayConfig:
    capacity: int = 10_000
    differentiated: bool = True
    negative_fraction: float = 0.1
    step_fraction: float = 0.1
    threshold: float | None = None
    threshold_quantile: float = 0.25
    threshold_window: int = 500
    invert_split: bool = False

    def validate(self) -> None:
        _require(self.capacity >= 2, "replay.capacity must be >= 2")
        _require(0.0 <= self.negative_fraction <= 1.0, "replay.negative_fraction must be in [0, 1]")
        _require(0.0 <= self.step_fraction <= 1.0, "replay.step_fraction must be in [0, 1]")
        _require(0.0 <= self.threshold_quantile <= 1.0, "replay.threshold_quantile in [0, 1]")
        _require(self.threshold_window >= 1, "replay.threshold_window must be >= 1")


AGENTS = ("ddpg", "random-refresh", "random-offload", "popular-refresh", "equal-bandwidth")


@dataclass
class ExperimentSection:
    n_vehicles: int = 10
    n_uavs: int = 2
    n_tasks: int = 5
    episodes: int = 500
    eval_episodes: int = 5
    seed: int = 1
    agent: str = "ddpg"
    popular_period: int = 5

    def validate(self) -> None:
        _require(self.n_vehicles >= 1, "experiment.n_vehicles must be >= 1")
        _require(self.n_uavs >= 0, "experiment.n_uavs must be >= 0")
        _require(self.n_tasks >= 1, "experiment.n_tasks must be >= 1")
        _require(self.episodes >= 0, "experiment.episodes must be >= 0")
        _require(self.eval_episodes >= 0, "experiment.eval_episodes must be >= 0")
        _require(self.seed >= 0, "experiment.seed must be >= 0")
        _require(self.agent in AGENTS, f"experiment.agent must be one of {AGENTS}")
        _require(self.popular_period >= 1, "experiment.popular_period must be >= 1")


SECTIONS = {
    "world": GeometryConfig,
    "channel": ChannelConfig,
    "compute": ComputeConfig,
    "tasks": TaskConfig,
    "cache": CacheConfig,
    "env": EnvConfig,
    "agent": AgentConfig,
    "replay": ReplayConfig,
    "experiment": ExperimentSection,
}


@dataclass
class ExperimentConfig:
    world: GeometryConfig = field(default_factory=GeometryConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    compute: ComputeConfig = field(default_factory=ComputeConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    def validate(self) -> "ExperimentConfig":
        for name in SECTIONS:
            getattr(self, name).validate()
        return self

    def replace(self, **dotted: Any) -> "ExperimentConfig":
        """Copy with ``section__key=value`` or ``{"section.key": value}`` overrides."""
        cfg = dataclasses.replace(
            self, **{name: dataclasses.replace(getattr(self, name)) for name in SECTIONS}
        )
        for key, value in dotted.items():
            cfg.set(key.replace("__", "."), value)
        return cfg.validate()

    def set(self, key: str, value: Any) -> None:
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ConfigError(f"unknown config key: {key}")
        obj = getattr(self, section)
        known = {f.name: f for f in fields(obj)}
        if name not in known:
            raise ConfigError(f"unknown config key: {key}")
        default = getattr(type(obj)(), name)
        setattr(obj, name, _coerce(key, value, default))

    def to_dict(self) -> dict[str, Any]:
        return {
            f"{section}.{f.name}": getattr(getattr(self, section), f.name)
            for section in SECTIONS
            for f in fields(getattr(self, section))
        }

    def dumps(self) -> str:
        return "".join(f"{key} = {value!r}\n" for key, value in self.to_dict().items())


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(value, str) and not isinstance(default, str) and default is not None:
        value = parse_value(value)
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return value
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) if isinstance(default[0], float) else int(v) for v in value)
        if default is None:
            return None if value in (None, "None", "none") else float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_value(text: str) -> Any:
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config_text(text: str) -> dict[str, Any]:
    entries: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        entries[key.strip()] = parse_value(value)
    return entries


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Defaults, then the file at ``path``, then ``overrides``; validated."""
    cfg = ExperimentConfig()
    if path is not None:
        for key, value in parse_config_text(Path(path).read_text(encoding="utf-8")).items():
            cfg.set(key, value)
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return cfg.validate()
