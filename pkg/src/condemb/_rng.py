"""Counter-based random streams.

Every stochastic component draws from a Philox generator keyed by the user
seed, with the purpose encoded in the counter's last word and the remaining
words free for structured indices (epoch, pair, branch). Streams for
different purposes never overlap, and a draw depends only on its counter,
not on how work was batched.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

LANE_SPLIT = 0x53504C49       # dataset shuffling for splits
LANE_INIT = 0x494E4954        # projection weight initialization
LANE_SHUFFLE = 0x45504F43     # per-epoch training-order shuffle
LANE_DROPOUT = 0x44524F50     # per-pair per-branch dropout masks
LANE_DIRECTIONS = 0x44495253  # isotropy direction sampling
LANE_SYNTH = 0x53594E54       # synthetic benchmark generation


def philox(seed: int, lane: int, c0: int = 0, c1: int = 0, c2: int = 0) -> np.random.Generator:
    """Generator on the Philox stream (seed; c0, c1, c2, lane)."""
    key = int(seed) & _MASK64
    counter = [int(c0) & _MASK64, int(c1) & _MASK64, int(c2) & _MASK64, int(lane) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h
