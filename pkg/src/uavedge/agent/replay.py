"""Experience replay split into positive and negative buffers by a reward threshold.

For the first ``ceil(step_fraction * steps_per_episode)`` steps of each
episode a batch holds ``round(negative_fraction * batch_size)`` negative
transitions and the rest positive ones; afterwards batches are drawn
uniformly from both buffers together.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    n_negative: int = 0

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class SampleRecord:
    step: int
    n_negative: int
    n_positive: int
    differentiated: bool
    negatives_stored: int = 0


class RingBuffer:
    """Fixed-capacity transition store; the oldest entry is overwritten first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self.head = 0

    def __len__(self) -> int:
        return self.size

    def add(self, tr: Transition) -> None:
        k = self.head
        self.states[k] = tr.state
        self.actions[k] = tr.action
        self.rewards[k] = tr.reward
        self.next_states[k] = tr.next_state
        self.head = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def oldest(self) -> int:
        """Slot index of the oldest stored entry."""
        return self.head if self.size == self.capacity else 0

    def take(self, idx: np.ndarray):
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]


class SplitReplay:
    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        steps_per_episode: int,
        capacity: int = 10_000,
        batch_size: int = 64,
        negative_fraction: float = 0.1,
        step_fraction: float = 0.1,
        differentiated: bool = True,
        threshold: float | None = None,
        threshold_quantile: float = 0.25,
        threshold_window: int = 500,
        invert_split: bool = False,
        rng: np.random.Generator | None = None,
        keep_log: bool = False,
    ):
        if not 0.0 <= negative_fraction <= 1.0:
            raise ValueError("negative_fraction must be in [0, 1]")
        half = capacity // 2
        self.positive = RingBuffer(half, state_dim, action_dim)
        self.negative = RingBuffer(capacity - half, state_dim, action_dim)
        self.batch_size = batch_size
        self.negative_fraction = negative_fraction
        self.differentiated = differentiated
        self.differentiated_steps = math.ceil(step_fraction * steps_per_episode - 1e-9)
        self.fixed_threshold = threshold
        self.threshold = threshold
        self.threshold_quantile = threshold_quantile
        self.recent = deque(maxlen=threshold_window)
        self.invert_split = invert_split
        self.rng = rng if rng is not None else np.random.default_rng()
        self.log: list[SampleRecord] | None = [] if keep_log else None

    def __len__(self) -> int:
        return len(self.positive) + len(self.negative)

    @property
    def negatives_per_batch(self) -> int:
        return int(round(self.negative_fraction * self.batch_size))

    def is_positive(self, reward: float) -> bool:
        if self.threshold is None:
            return True
        if self.invert_split:
            return reward <= self.threshold
        return reward >= self.threshold

    def store(self, tr: Transition) -> None:
        self.recent.append(float(tr.reward))
        (self.positive if self.is_positive(tr.reward) else self.negative).add(tr)

    def end_episode(self) -> None:
        """Re-estimate the split threshold from recent rewards unless it is fixed."""
        if self.fixed_threshold is None and self.recent:
            self.threshold = float(np.quantile(np.fromiter(self.recent, float), self.threshold_quantile))

    def sample(self, step_in_episode: int) -> Batch | None:
        """A training batch, or None while fewer than ``batch_size`` transitions are stored."""
        n = self.batch_size
        if len(self) < n:
            return None
        differentiated = self.differentiated and step_in_episode < self.differentiated_steps
        if differentiated:
            n_neg = min(self.negatives_per_batch, len(self.negative))
            n_neg = max(n_neg, n - len(self.positive))
            neg_idx = self.rng.choice(len(self.negative), n_neg, replace=False)
            pos_idx = self.rng.choice(len(self.positive), n - n_neg, replace=False)
        else:
            pick = self.rng.choice(len(self), n, replace=False)
            neg_idx = pick[pick >= len(self.positive)] - len(self.positive)
            pos_idx = pick[pick < len(self.positive)]
            n_neg = len(neg_idx)
        parts = [self.positive.take(pos_idx), self.negative.take(neg_idx)]
        s, a, r, s2 = (np.concatenate(cols) for cols in zip(*parts))
        log.debug("replay step=%d negative=%d positive=%d differentiated=%s stored_negative=%d",
                  step_in_episode, n_neg, n - n_neg, differentiated, len(self.negative))
        if self.log is not None:
            self.log.append(SampleRecord(step_in_episode, n_neg, n - n_neg, differentiated, len(self.negative)))
        return Batch(s, a, r, s2, n_neg)
