"""Where a head task runs, how long it takes and what it costs.

Execution choices are small ints per vehicle: ``LOCAL`` (0), UAV ``j``
as ``j + 1`` for ``j`` in ``0..M-1``, the base station as ``M + 1``, and
``DEFER`` (-1) when the task waits for a later slot.
"""

from __future__ import annotations

import numpy as np

DEFER = -1
LOCAL = 0


def uav_choice(j: int) -> int:
    return j + 1


def bs_choice(n_uavs: int) -> int:
    return n_uavs + 1


def local_time(cycles: float, local_freq: float) -> float:
    return cycles / local_freq


def local_energy(cycles: float, local_freq: float, energy_coeff: float) -> float:
    return energy_coeff * local_freq**2 * cycles


def cpu_share(max_freq, offload_count):
    """Equal split of a server's CPU among the tasks offloaded to it (scalars or arrays)."""
    if (np.asarray(offload_count) < 1).any():
        raise ValueError("cpu_share needs at least one offloaded task")
    return max_freq / offload_count


def mec_time(cycles: float, share: float) -> float:
    return cycles / share


def slot_feasible(choice, tx, exec_time, slot_length: float):
    """Local runs must fit the slot alone; offloads must fit upload plus remote run.

    Works elementwise on arrays; scalars give a plain bool.
    """
    choice = np.asarray(choice)
    tx, exec_time = np.asarray(tx, dtype=float), np.asarray(exec_time, dtype=float)
    fits = np.where(choice == LOCAL, exec_time <= slot_length, tx + exec_time <= slot_length)
    fits = fits | (choice == DEFER)
    return bool(fits) if fits.ndim == 0 else fits
