"""Deterministic policy gradient learner with target networks."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..config import AgentConfig
from .mlp import Mlp
from .noise import OuNoise
from .replay import Batch

CHECKPOINT_FORMAT = "uavedge-ddpg"
CHECKPOINT_VERSION = 1


class TrainingDivergence(FloatingPointError):
    """Loss or parameters became non-finite during training."""


class Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params, grads, sign: float = -1.0) -> None:
        for p, g in zip(params, grads):
            p += sign * self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grads, sign: float = -1.0) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p += sign * self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind: str, lr: float):
    return Adam(lr) if kind == "adam" else Sgd(lr)


def select_action(actor: Mlp, state, noise: OuNoise | None = None) -> np.ndarray:
    """Actor output plus exploration noise, clipped to the unit box."""
    a = actor(state)
    if noise is not None:
        a = a + noise.sample()
    return np.clip(a, -1.0, 1.0)


def critic_loss_and_grads(critic: Mlp, states, actions, targets):
    """Mean squared TD error and its gradient with respect to the critic parameters."""
    x = np.concatenate([states, actions], axis=1)
    q, cache = critic.forward(x)
    err = q[:, 0] - targets
    loss = float(np.mean(err**2))
    grads, _ = critic.backward(cache, (2.0 / len(err)) * err[:, None])
    return loss, grads


def actor_objective_and_grads(actor: Mlp, critic: Mlp, states):
    """Batch mean of Q(s, mu(s)) and its gradient with respect to the actor parameters.

    Also returns the critic's action-gradient, chained through the actor.
    """
    a, a_cache = actor.forward(states)
    x = np.concatenate([states, a], axis=1)
    q, c_cache = critic.forward(x)
    n = len(states)
    _, dx = critic.backward(c_cache, np.full((n, 1), 1.0 / n))
    dq_da = dx[:, states.shape[1]:]
    grads, _ = actor.backward(a_cache, dq_da)
    return float(q.mean()), grads, dq_da


class DdpgAgent:
    def __init__(self, state_dim: int, action_dim: int, cfg: AgentConfig | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg or AgentConfig()
        self.state_dim, self.action_dim = state_dim, action_dim
        rng = rng if rng is not None else np.random.default_rng()
        hidden = tuple(int(h) for h in self.cfg.hidden)
        self.actor = Mlp((state_dim, *hidden, action_dim), output="tanh", rng=rng)
        self.critic = Mlp((state_dim + action_dim, *hidden, 1), output="identity", rng=rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = make_optimizer(self.cfg.optimizer, self.cfg.actor_lr)
        self.critic_opt = make_optimizer(self.cfg.optimizer, self.cfg.critic_lr)
        self.updates = 0

    def act(self, state, noise: OuNoise | None = None) -> np.ndarray:
        return select_action(self.actor, state, noise)

    def targets(self, batch: Batch) -> np.ndarray:
        a2 = self.actor_target(batch.next_states)
        q2 = self.critic_target(np.concatenate([batch.next_states, a2], axis=1))[:, 0]
        return batch.rewards + self.cfg.gamma * q2

    def train_step(self, batch: Batch) -> dict:
        if len(batch) == 0:
            raise ValueError("empty batch")
        y = self.targets(batch)
        c_loss, c_grads = critic_loss_and_grads(self.critic, batch.states, batch.actions, y)
        if not np.isfinite(c_loss):
            raise TrainingDivergence(f"critic loss is {c_loss} after {self.updates} updates")
        self.critic_opt.step(self.critic.params, c_grads, sign=-1.0)
        objective, a_grads, _ = actor_objective_and_grads(self.actor, self.critic, batch.states)
        if not np.isfinite(objective):
            raise TrainingDivergence(f"actor objective is {objective} after {self.updates} updates")
        self.actor_opt.step(self.actor.params, a_grads, sign=+1.0)
        self.critic_target.soft_update(self.critic, self.cfg.tau)
        self.actor_target.soft_update(self.actor, self.cfg.tau)
        self.updates += 1
        return {"critic_loss": c_loss, "actor_objective": objective}

    # -- persistence --------------------------------------------------------
    def save(self, path: str | Path, extra: dict | None = None) -> None:
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "agent": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(self.cfg).items()},
            "updates": self.updates,
            "extra": extra or {},
        }
        arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
        for name in ("actor", "critic", "actor_target", "critic_target"):
            for k, p in enumerate(getattr(self, name).params):
                arrays[f"{name}/{k}"] = p
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> tuple["DdpgAgent", dict]:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(bytes(data["header"]).decode())
            if header.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
            if header.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header.get('version')}")
            fields = header["agent"]
            cfg = AgentConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in fields.items()})
            agent = cls(header["state_dim"], header["action_dim"], cfg, rng=np.random.default_rng(0))
            for name in ("actor", "critic", "actor_target", "critic_target"):
                net = getattr(agent, name)
                net.set_params([data[f"{name}/{k}"] for k in range(len(net.params))])
        agent.updates = header["updates"]
        return agent, header.get("extra", {})
