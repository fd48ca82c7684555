"""Named, independent random streams derived from one master seed."""

from __future__ import annotations

import numpy as np

STREAMS = ("scenario", "mobility", "arrivals", "network_init", "noise", "replay", "policy")


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for ``name``; drawing from one stream never shifts another."""
    idx = STREAMS.index(name)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(idx,))))
