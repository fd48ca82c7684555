"""Reference implementations used only by the tests.

They are written naively on purpose (scalar loops, dictionaries) and share
no code with the package beyond plain data.
"""

from __future__ import annotations

import math

import numpy as np


class AgeTracker:
    """Scalar replay of the cache-age and status-age recursions from an event log."""

    def __init__(self, n_vehicles: int, n_uavs: int, n_tasks: int):
        self.n, self.m, self.w = n_vehicles, n_uavs, n_tasks
        self.veh = {(i, k): None for i in range(n_vehicles) for k in range(n_tasks)}
        self.uav = {(j, k): None for j in range(n_uavs) for k in range(n_tasks)}
        self.status = [0] * n_vehicles

    @staticmethod
    def _next(prev, y, keep):
        if not keep:
            return None
        if y:
            return 1
        assert prev is not None, "kept an entry that was never fetched"
        return prev + 1

    def apply(self, t, y_veh, y_uav, c_veh, c_uav, completions):
        for (i, k), prev in list(self.veh.items()):
            self.veh[(i, k)] = self._next(prev, bool(y_veh[i][k]), bool(c_veh[i][k]))
        for (j, k), prev in list(self.uav.items()):
            self.uav[(j, k)] = self._next(prev, bool(y_uav[j][k]), bool(c_uav[j][k]))
        finished = {}
        for vehicle, task, gen_time, choice in completions:
            if choice == 0:
                data_age = self.veh[(vehicle, task)]
            elif choice <= self.m:
                data_age = self.uav[(choice - 1, task)]
            else:
                data_age = 0
            assert data_age is not None, "executed with uncached data"
            finished[vehicle] = (t - gen_time) + data_age
        for i in range(self.n):
            self.status[i] = finished[i] if i in finished else self.status[i] + 1

    def veh_matrix(self, uncached=-1):
        return np.array([[uncached if self.veh[(i, k)] is None else self.veh[(i, k)] for k in range(self.w)]
                         for i in range(self.n)])

    def uav_matrix(self, uncached=-1):
        return np.array([[uncached if self.uav[(j, k)] is None else self.uav[(j, k)] for k in range(self.w)]
                         for j in range(self.m)]).reshape(self.m, self.w)


def naive_forward(weights, biases, x, output):
    """Element-by-element network evaluation for one input vector."""
    h = [float(v) for v in x]
    last = len(weights) - 1
    for k, (W, b) in enumerate(zip(weights, biases)):
        n_in, n_out = W.shape
        z = []
        for o in range(n_out):
            acc = float(b[o])
            for i in range(n_in):
                acc += h[i] * float(W[i, o])
            z.append(acc)
        if k < last:
            h = [max(v, 0.0) for v in z]
        elif output == "tanh":
            h = [math.tanh(v) for v in z]
        else:
            h = z
    return np.array(h)


def central_difference(f, params, h=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. each array in ``params`` (perturbed in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = f()
            p[idx] = old - h
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(a, b):
    """Largest per-array relative error ||a-b|| / max(||a||, ||b||)."""
    worst = 0.0
    for x, y in zip(a, b):
        denom = max(np.linalg.norm(x), np.linalg.norm(y))
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(x - y) / denom))
    return worst
