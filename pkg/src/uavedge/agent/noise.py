from __future__ import annotations

import numpy as np


class OuNoise:
    """Ornstein-Uhlenbeck process, one step per call, unit time step."""

    def __init__(self, dim: int, theta: float = 0.15, sigma: float = 0.2, mu: float = 0.0,
                 sigma_decay: float = 1.0, rng: np.random.Generator | None = None):
        if sigma < 0:
            raise ValueError("volatility must be non-negative")
        self.dim, self.theta, self.sigma, self.mu = dim, theta, sigma, mu
        self.sigma_decay = sigma_decay
        self.rng = rng if rng is not None else np.random.default_rng()
        self.state = np.full(dim, mu, dtype=float)

    def reset(self) -> None:
        self.state = np.full(self.dim, self.mu, dtype=float)

    def decay(self) -> None:
        self.sigma *= self.sigma_decay

    def sample(self) -> np.ndarray:
        self.state = self.state + self.theta * (self.mu - self.state) + self.sigma * self.rng.standard_normal(self.dim)
        return self.state.copy()
