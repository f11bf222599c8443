"""Growth rates of long random matrix products.

``growth_rate_mc`` estimates the top Lyapunov exponent
``gamma = lim (1/N) log ||M_N ... M_1||`` by direct multiplication.  Trial
``i`` always draws its forcing strengths from substream ``i`` of the seed, so
estimates for different models (or different points of a parameter sweep)
that share a seed use common random numbers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, NonFiniteError
from .model import CycleParams, FixedAf, ForcingModel, sample_arrays
from .rng import RandomStream, default_threads
from .transfer import closed_form_elements, elements, log_spectral_radius

__all__ = [
    "GrowthEstimate",
    "growth_rate_mc",
    "growth_rate_grid",
    "asymptotic_growth_rate",
    "classical_growth_rate",
    "DEFAULT_CYCLES",
    "DEFAULT_TRIALS",
    "DEFAULT_BURN_IN",
]

DEFAULT_CYCLES = 100_000
DEFAULT_TRIALS = 16
DEFAULT_BURN_IN = 100
CHUNK = 1 << 15


@dataclass(frozen=True)
class GrowthEstimate:
    """A growth rate in nats per cycle.

    ``stderr`` is the standard error across trials; it is 0 for a single
    trial, which means "no error bar" rather than "exact".
    """

    gamma: float
    stderr: float
    n_cycles: int
    n_trials: int
    estimator: str
    trials: tuple = field(default=(), repr=False, compare=False)

    @classmethod
    def from_trials(cls, values, n_cycles: int, estimator: str) -> "GrowthEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        gamma = float(math.fsum(values) / n)
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(gamma, stderr, int(n_cycles), int(n), estimator, tuple(float(v) for v in values))


def _map_trials(fn, n_trials: int, threads: int | None):
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or n_trials == 1:
        return [fn(i) for i in range(n_trials)]
    with ThreadPoolExecutor(max_workers=min(threads, n_trials)) as pool:
        # map preserves trial order, so the reduction is scheduling independent
        return list(pool.map(fn, range(n_trials)))


def _check_counts(n_cycles: int, n_trials: int, burn_in: int, min_cycles: int = 1000):
    if n_cycles < min_cycles:
        raise InvalidParameterError(f"n_cycles must be >= {min_cycles}, got {n_cycles}")
    if n_trials < 1:
        raise InvalidParameterError(f"n_trials must be >= 1, got {n_trials}")
    if burn_in < 0:
        raise InvalidParameterError(f"burn_in must be >= 0, got {burn_in}")


class _Lanes:
    """Product state for several fixed-af lanes driven by one uniform stream."""

    def __init__(self, af, qlo, qspan):
        self.coef = _kernels.fixed_af_coefficients(af)
        n = self.coef.shape[1]
        self.qlo = np.ascontiguousarray(np.broadcast_to(np.asarray(qlo, dtype=float), n))
        self.qspan = np.ascontiguousarray(np.broadcast_to(np.asarray(qspan, dtype=float), n))
        self.a = np.zeros((4, n))
        self.a[0] = 1.0
        self.a[3] = 1.0
        self.acc = np.ones(n)
        self.logn = np.zeros(n)

    def run(self, u):
        _kernels.advance_fixed(self.coef, self.qlo, self.qspan, u, self.a, self.acc, self.logn)
        if not np.all(np.isfinite(self.a)):
            raise NonFiniteError("matrix product became non-finite")

    def log_norm(self, norm: str) -> np.ndarray:
        total = self.logn + np.log(self.acc)
        if norm == "maxabs":
            return total + np.log(np.max(np.abs(self.a), axis=0))
        if norm == "frobenius":
            return total + 0.5 * np.log(np.sum(self.a * self.a, axis=0))
        raise InvalidParameterError(f"unknown norm {norm!r}")


def _drive_fixed(lanes: _Lanes, stream: RandomStream, burn_in: int, n_cycles: int, norm: str):
    """Advance all lanes by ``burn_in + n_cycles`` draws; return the per-lane rate."""
    remaining = burn_in
    while remaining > 0:
        m = min(CHUNK, remaining)
        lanes.run(stream.uniform_q(m))
        remaining -= m
    start = lanes.log_norm(norm)
    remaining = n_cycles
    while remaining > 0:
        m = min(CHUNK, remaining)
        lanes.run(stream.uniform_q(m))
        remaining -= m
    return (lanes.log_norm(norm) - start) / n_cycles


def _drive_varying(model: ForcingModel, stream: RandomStream, burn_in: int, n_cycles: int, norm: str):
    a = np.zeros((4, 1))
    a[0, 0] = a[3, 0] = 1.0
    acc = np.ones(1)
    logn = np.zeros(1)

    def log_norm():
        base = logn[0] + math.log(acc[0])
        if norm == "maxabs":
            return base + math.log(float(np.max(np.abs(a))))
        if norm == "frobenius":
            return base + 0.5 * math.log(float(np.sum(a * a)))
        raise InvalidParameterError(f"unknown norm {norm!r}")

    def run(m):
        af, q = sample_arrays(model, stream, m)
        _kernels.advance_varying(af, q, a, acc, logn)
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("matrix product became non-finite")

    remaining = burn_in
    while remaining > 0:
        m = min(CHUNK, remaining)
        run(m)
        remaining -= m
    start = log_norm()
    remaining = n_cycles
    while remaining > 0:
        m = min(CHUNK, remaining)
        run(m)
        remaining -= m
    return (log_norm() - start) / n_cycles


def growth_rate_mc(
    model: ForcingModel,
    n_cycles: int = DEFAULT_CYCLES,
    n_trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    *,
    burn_in: int = DEFAULT_BURN_IN,
    norm: str = "maxabs",
    threads: int | None = None,
) -> GrowthEstimate:
    """Monte Carlo growth rate of the random matrix product.

    Each trial multiplies ``burn_in + n_cycles`` cycle matrices and reports
    the increase of ``log ||product||`` over the last ``n_cycles`` of them,
    divided by ``n_cycles``.
    """
    _check_counts(n_cycles, n_trials, burn_in)
    ql = model.q_law

    if isinstance(model.af_law, FixedAf):
        def one(i):
            lanes = _Lanes(model.af_law.af, ql.lo, ql.span)
            return float(_drive_fixed(lanes, RandomStream(seed, i), burn_in, n_cycles, norm)[0])
    else:
        def one(i):
            return _drive_varying(model, RandomStream(seed, i), burn_in, n_cycles, norm)

    values = _map_trials(one, n_trials, threads)
    return GrowthEstimate.from_trials(values, n_cycles, f"product_{norm}")


def growth_rate_grid(
    models: Sequence[ForcingModel],
    n_cycles: int = DEFAULT_CYCLES,
    n_trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    *,
    burn_in: int = DEFAULT_BURN_IN,
    norm: str = "maxabs",
    threads: int | None = None,
) -> list[GrowthEstimate]:
    """``growth_rate_mc`` for many fixed-af models at once.

    All models are advanced together from the same per-trial stream, so
    entry ``j`` is bit-identical to ``growth_rate_mc(models[j], ...)``.
    """
    _check_counts(n_cycles, n_trials, burn_in)
    if not models:
        return []
    for m in models:
        if not isinstance(m.af_law, FixedAf):
            raise InvalidParameterError("growth_rate_grid needs fixed-af models")
    af = [m.af_law.af for m in models]
    qlo = [m.q_law.lo for m in models]
    qspan = [m.q_law.span for m in models]

    def one(i):
        lanes = _Lanes(af, qlo, qspan)
        return _drive_fixed(lanes, RandomStream(seed, i), burn_in, n_cycles, norm)

    per_trial = np.array(_map_trials(one, n_trials, threads))  # (n_trials, n_models)
    return [
        GrowthEstimate.from_trials(per_trial[:, j], n_cycles, f"product_{norm}")
        for j in range(len(models))
    ]


def asymptotic_growth_rate(model: ForcingModel, n_samples: int = 1_000_000, seed: int = 0) -> GrowthEstimate:
    """Mean single-cycle growth rate (log spectral radius, 0 for elliptic cycles)."""
    if n_samples < 1000:
        raise InvalidParameterError(f"n_samples must be >= 1000, got {n_samples}")
    if model.is_degenerate:
        h, _ = closed_form_elements(CycleParams(model.af_law.af, model.q_law.q))
        r = float(log_spectral_radius(h))
        return GrowthEstimate(r, 0.0, 1, 1, "asymptotic", (r,))
    stream = RandomStream(seed, 0)
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    while remaining > 0:
        m = min(1 << 18, remaining)
        af, q = sample_arrays(model, stream, m)
        h, _ = elements(af, q)
        if not np.all(np.isfinite(h)):
            raise NonFiniteError("non-finite matrix element")
        r = log_spectral_radius(h)
        total += math.fsum(r)
        total_sq += math.fsum(r * r)
        remaining -= m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return GrowthEstimate(mean, math.sqrt(var / n_samples), 1, n_samples, "asymptotic")


def classical_growth_rate(p: CycleParams) -> float:
    """Growth rate of the fixed-parameter equation: log spectral radius of one cycle."""
    h, _ = closed_form_elements(p)
    return float(log_spectral_radius(h))
