"""Air-to-ground and vehicle-to-BS channels, rates, transmission time and energy."""

from __future__ import annotations

import numpy as np

from .config import ChannelConfig

# relative slack for the bandwidth sum, covers rounding in B * w / sum(w)
BANDWIDTH_RTOL = 1e-12


class InfeasibleLinkError(ValueError):
    pass


def los_probability(elevation, cfg: ChannelConfig):
    """Probability of line of sight at an elevation angle in degrees."""
    return 1.0 / (1.0 + cfg.env_a * np.exp(-cfg.env_b * (np.asarray(elevation) - cfg.env_a)))


def uav_channel_gain(distance, elevation, cfg: ChannelConfig, p_los=None):
    """Average of LoS and NLoS gains weighted by the LoS probability."""
    if p_los is None:
        p_los = los_probability(elevation, cfg)
    base = cfg.beta0 * np.asarray(distance, dtype=float) ** (-cfg.pathloss_exponent)
    return p_los * base / cfg.eta_los + (1.0 - p_los) * base / cfg.eta_nlos


def bs_channel_gain(distance, cfg: ChannelConfig):
    """Deterministic log-distance gain towards the base station."""
    return cfg.beta0 * np.asarray(distance, dtype=float) ** (-cfg.pathloss_exponent)


def rate(bandwidth, gain, cfg: ChannelConfig):
    """Shannon rate in bit/s."""
    return np.asarray(bandwidth) * np.log2(1.0 + cfg.tx_power * np.asarray(gain) / cfg.noise_power)


def tx_time(task_bits: float, link_rate: float) -> float:
    if task_bits == 0:
        return 0.0
    if link_rate <= 0:
        raise InfeasibleLinkError(f"cannot send {task_bits} bits over a zero-rate link")
    return task_bits / link_rate


def offload_energy(tx_power: float, duration: float) -> float:
    return tx_power * duration


def validate_bandwidth(plan, cfg: ChannelConfig) -> bool:
    b = np.asarray(plan, dtype=float)
    if b.size == 0:
        return True
    return bool(np.all(b >= 0) and b.sum() <= cfg.bandwidth * (1.0 + BANDWIDTH_RTOL))
