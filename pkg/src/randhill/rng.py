"""Seeded random streams.

Every Monte Carlo trial owns one :class:`RandomStream`.  Streams are built on
numpy's Philox4x64-10 counter-based generator; the substream for trial ``i``
of a run seeded with ``seed`` is keyed by ``SeedSequence(seed,
spawn_key=(i, channel))``.  Channels separate the independent inputs of a
cycle (forcing strength, oscillation angle, auxiliary phases), so the draws
for one input never depend on whether another input is random.  Results are
therefore independent of thread scheduling and of chunk sizes.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = ["RandomStream", "default_threads", "THREADS_ENV"]

THREADS_ENV = "RANDHILL_THREADS"

# channel ids
Q_CHANNEL = 0
AF_CHANNEL = 1
AUX_CHANNEL = 2


def _generator(seed: int, trial: int, channel: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial), channel))
    return np.random.Generator(np.random.Philox(ss))


class RandomStream:
    """Uniform draws for one trial.

    ``uniform_q``/``uniform_af``/``uniform_aux`` return arrays on [0, 1);
    a call with ``n`` draws continues the sequence exactly where the previous
    call stopped, so ``uniform_q(3)`` equals three calls of ``uniform_q(1)``.
    """

    def __init__(self, seed: int, trial: int = 0):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.trial = int(trial)
        self._q = _generator(seed, trial, Q_CHANNEL)
        self._af = _generator(seed, trial, AF_CHANNEL)
        self._aux = _generator(seed, trial, AUX_CHANNEL)

    def uniform_q(self, n: int) -> np.ndarray:
        return self._q.random(n)

    def uniform_af(self, n: int) -> np.ndarray:
        return self._af.random(n)

    def uniform_aux(self, n: int) -> np.ndarray:
        return self._aux.random(n)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, trial={self.trial})"


def default_threads() -> int:
    """Worker count from ``RANDHILL_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)
