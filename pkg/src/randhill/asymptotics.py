"""Closed-form and semi-analytic growth-rate approximations.

Large forcing (``|q| >> 1``, fixed af):

* ``gamma_large_q``    -- ``< log|2 h| >``, error O(1/q**2) for iid forcing
* ``gamma_infinite_q`` -- ``< log|q sin(phi) / sqrt(af)| >``, error O(1/q)
* ``delta_gamma_x``, ``delta_gamma_phi`` -- the two correction terms

Small forcing (``|q| << 1``, symmetric q, fixed af):

* ``gamma_small_q``       -- ``log(1 + <q**2> / (8 af))``
* ``gamma_fokker_planck`` -- ``<q**2> / (2 pi af)`` from the diffusion picture

Expectations over a forcing model are Monte Carlo averages with the same
trial/substream layout as :func:`randhill.lyapunov.growth_rate_mc`.  With
equal ``seed``, ``n_trials`` and ``burn_in`` the q samples are exactly the
ones that drove the matrix product, so differences between an approximation
and the product estimate are paired and nearly free of sampling noise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InvalidParameterError, ResonanceError
from .lyapunov import DEFAULT_BURN_IN, DEFAULT_TRIALS, _map_trials
from .model import (
    ConstantQ,
    FixedAf,
    ForcingModel,
    ShiftedUniformQ,
    SymmetricUniformQ,
    UniformQ,
    moments_of,
    sample_arrays,
)
from .rng import RandomStream
from .transfer import elements, ratio_x_array

__all__ = [
    "ApproxRate",
    "gamma_large_q",
    "gamma_infinite_q",
    "delta_gamma_x",
    "delta_gamma_phi",
    "delta_gamma_phi_limit",
    "gamma_small_q",
    "gamma_fokker_planck",
    "stability_band_width",
    "check_resonance",
    "q_reference",
    "LARGE_Q_GUARD",
]

# guard zone = LARGE_Q_GUARD * large-q band width (twice the half-width) around af = n**2
LARGE_Q_GUARD = 1.0
REGIMES = ("large_q", "infinite_q", "small_q", "fokker_planck")


@dataclass(frozen=True)
class ApproxRate:
    gamma: float
    regime: str
    stderr: float = 0.0
    correction_terms: Mapping[str, float] | None = None
    trials: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise InvalidParameterError(f"unknown regime {self.regime!r}")

    @classmethod
    def from_trials(cls, values, regime: str) -> "ApproxRate":
        values = np.asarray(values, dtype=float)
        n = values.size
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(math.fsum(values) / n), regime, stderr, None, tuple(float(v) for v in values))


def q_reference(model: ForcingModel) -> float:
    """Scalar forcing strength used for band widths: the mean of ``|q|``."""
    return moments_of(model).mean_abs_q


def stability_band_width(n: int, model: ForcingModel, regime: str) -> float:
    """Width in af of the stability zone around ``af = n**2``.

    ``small_q``: ``2 q_ref / pi`` (independent of n);
    ``large_q``: ``8 n**2 / (pi q_ref)``.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    q_ref = q_reference(model)
    if regime == "small_q":
        return 2.0 * q_ref / math.pi
    if regime == "large_q":
        if q_ref == 0.0:
            return math.inf
        return 8.0 * n * n / (math.pi * q_ref)
    raise InvalidParameterError(f"regime must be 'small_q' or 'large_q', got {regime!r}")


def _nearest_squares(af: float):
    r = math.sqrt(af)
    return sorted({max(1, math.floor(r)), max(1, math.ceil(r))})


def check_resonance(af: float, width_of, factor: float = 1.0, what: str = "") -> None:
    """Raise :class:`ResonanceError` if ``|af - n**2| < factor * width_of(n)`` for a nearby n."""
    for n in _nearest_squares(af):
        width = factor * width_of(n)
        if abs(af - n * n) < width:
            raise ResonanceError(af, n, width, what)


def _fixed_af(model: ForcingModel, what: str) -> float:
    if not isinstance(model.af_law, FixedAf):
        raise InvalidParameterError(f"{what} requires a fixed-af model")
    return model.af_law.af


def _large_q_guard(model: ForcingModel, what: str) -> float:
    af = _fixed_af(model, what)
    check_resonance(af, lambda n: stability_band_width(n, model, "large_q"), LARGE_Q_GUARD, what)
    return af


def _q_support(model: ForcingModel):
    ql = model.q_law
    return ql.lo, ql.lo + ql.span


def _paired_trial_means(model, fn, n_samples, n_trials, seed, burn_in, threads):
    """Per-trial means of ``fn(q)`` over the q draws growth_rate_mc would use."""
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    per_trial = n_samples // n_trials
    if per_trial < 1:
        raise InvalidParameterError("n_samples must be >= n_trials")

    def one(i):
        stream = RandomStream(seed, i)
        remaining = burn_in
        while remaining > 0:
            m = min(1 << 15, remaining)
            stream.uniform_q(m)
            remaining -= m
        total = 0.0
        remaining = per_trial
        while remaining > 0:
            m = min(1 << 15, remaining)
            total += math.fsum(fn(model.q_from_uniform(stream.uniform_q(m))))
            remaining -= m
        return total / per_trial

    return _map_trials(one, n_trials, threads)


def gamma_large_q(
    model: ForcingModel,
    n_samples: int = 1_600_000,
    seed: int = 0,
    *,
    n_trials: int = DEFAULT_TRIALS,
    burn_in: int = DEFAULT_BURN_IN,
    threads: int | None = None,
) -> ApproxRate:
    """``< log|2 h| >`` -- leading large-q growth rate."""
    af = _large_q_guard(model, "gamma_large_q")
    if model.is_degenerate:
        (h,), _ = elements([af], [model.q_law.q])
        return ApproxRate(math.log(abs(2.0 * h)), "large_q")

    def fn(q):
        h, _ = elements(af, q)
        return np.log(np.abs(2.0 * h))

    vals = _paired_trial_means(model, fn, n_samples, n_trials, seed, burn_in, threads)
    return ApproxRate.from_trials(vals, "large_q")


def gamma_infinite_q(
    model: ForcingModel,
    n_samples: int = 1_600_000,
    seed: int = 0,
    *,
    n_trials: int = DEFAULT_TRIALS,
    burn_in: int = DEFAULT_BURN_IN,
    threads: int | None = None,
) -> ApproxRate:
    """``< log|q sin(sqrt(af) pi) / sqrt(af)| >`` -- the q -> infinity limit."""
    af = _large_q_guard(model, "gamma_infinite_q")
    lo, hi = _q_support(model)
    if lo <= 0.0 <= hi:
        raise InvalidParameterError("gamma_infinite_q: the q law reaches q = 0 (log diverges)")
    w = math.sqrt(af)
    k = abs(math.sin(w * math.pi) / w)
    if model.is_degenerate:
        return ApproxRate(math.log(abs(model.q_law.q) * k), "infinite_q")
    vals = _paired_trial_means(
        model, lambda q: np.log(np.abs(q) * k), n_samples, n_trials, seed, burn_in, threads
    )
    return ApproxRate.from_trials(vals, "infinite_q")


def _mean_and_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = math.fsum(values) / n
    return mean, float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def delta_gamma_x(
    model: ForcingModel, n_pairs: int = 1_000_000, seed: int = 0, *, return_stderr: bool = False
):
    """Correction from cycle-to-cycle variation of ``x = h/g``:
    ``< log|1 + x1/x2| > - log 2`` over independent pairs.

    Each pair enters in both orders, which leaves the expectation unchanged
    and cancels the first-order sampling noise.
    """
    af = _large_q_guard(model, "delta_gamma_x")
    if model.is_degenerate:
        return (0.0, 0.0) if return_stderr else 0.0
    stream = RandomStream(seed, 0)
    _, q1 = sample_arrays(model, stream, n_pairs)
    _, q2 = sample_arrays(model, stream, n_pairs)
    x1 = ratio_x_array(af, q1)
    x2 = ratio_x_array(af, q2)
    terms = 0.5 * (np.log(np.abs(1.0 + x1 / x2)) + np.log(np.abs(1.0 + x2 / x1))) - math.log(2.0)
    mean, err = _mean_and_stderr(terms)
    return (mean, err) if return_stderr else mean


def delta_gamma_x_pairs(x1, x2) -> float:
    """``< log|1 + x1/x2| > - log 2`` for explicit sample arrays (no symmetrisation)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return math.fsum(np.log(np.abs(1.0 + x1 / x2))) / x1.size - math.log(2.0)


def delta_gamma_phi(
    model: ForcingModel, n_triples: int = 1_000_000, seed: int = 0, *, return_stderr: bool = False
):
    """Correction from ``1 - 1/h**2`` departing from 1, averaged over sliding
    windows ``(x_{k-1}, x_k, x_{k+1})`` of one iid sequence."""
    af = _large_q_guard(model, "delta_gamma_phi")
    lo, hi = _q_support(model)
    if lo <= 0.0 <= hi:
        raise InvalidParameterError("delta_gamma_phi: the q law reaches q = 0")
    stream = RandomStream(seed, 0)
    _, q = sample_arrays(model, stream, n_triples + 2)
    phi = math.sqrt(af) * math.pi
    x = ratio_x_array(af, q)
    xk, xprev, xnext, qk = x[1:-1], x[:-2], x[2:], q[1:-1]
    ang = 4.0 * phi * phi / math.sin(phi) ** 2
    terms = xk * xk / ((xk + xnext) * (xk + xprev)) * ang / (math.pi**2 * qk * qk)
    mean = math.fsum(terms) / terms.size
    if not return_stderr:
        return mean
    # windows overlap, so use batch means
    nb = 64
    usable = (terms.size // nb) * nb
    batches = terms[:usable].reshape(nb, -1).mean(axis=1)
    return mean, float(np.std(batches, ddof=1) / math.sqrt(nb))


def delta_gamma_phi_limit(model: ForcingModel) -> float:
    """Large-q, fixed-angle form ``af / sin(phi)**2 * <1/q**2>`` (exact moment)."""
    af = _large_q_guard(model, "delta_gamma_phi_limit")
    ql = model.q_law
    if isinstance(ql, ConstantQ):
        inv_sq = 1.0 / ql.q**2
    else:
        lo, hi = _q_support(model)
        if lo <= 0.0 <= hi:
            raise InvalidParameterError("the q law reaches q = 0")
        inv_sq = (1.0 / lo - 1.0 / hi) / (hi - lo)
    return af / math.sin(math.sqrt(af) * math.pi) ** 2 * inv_sq


def gamma_small_q(
    af: float,
    mean_q_sq: float,
    *,
    mean_q: float = 0.0,
    q_ref: float | None = None,
    check: bool = True,
) -> ApproxRate:
    """``log(1 + <q**2> / (8 af))`` for small symmetric forcing.

    The resonance check rejects af within half a band width ``q_ref / pi`` of
    a square integer; ``q_ref`` defaults to ``sqrt(<q**2>)``.  A non-zero
    ``mean_q`` only warns, since the formula is routinely used beyond its
    symmetric-forcing assumption.
    """
    if not af > 0.0:
        raise InvalidParameterError(f"af must be > 0, got {af!r}")
    if mean_q_sq < 0.0:
        raise InvalidParameterError(f"mean_q_sq must be >= 0, got {mean_q_sq!r}")
    if mean_q != 0.0:
        warnings.warn(
            f"gamma_small_q assumes symmetric forcing but <q> = {mean_q!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    if check:
        ref = math.sqrt(mean_q_sq) if q_ref is None else float(q_ref)
        check_resonance(af, lambda n: ref / math.pi, 1.0, "gamma_small_q")
    return ApproxRate(math.log1p(mean_q_sq / (8.0 * af)), "small_q")


def gamma_fokker_planck(af: float, mean_q_sq: float) -> ApproxRate:
    """``D / (2 af)`` with diffusion constant ``D = <q**2> / pi``."""
    if not af > 0.0:
        raise InvalidParameterError(f"af must be > 0, got {af!r}")
    if mean_q_sq < 0.0:
        raise InvalidParameterError(f"mean_q_sq must be >= 0, got {mean_q_sq!r}")
    return ApproxRate(mean_q_sq / (2.0 * math.pi * af), "fokker_planck")


def diffusion_constant(mean_q_sq: float) -> float:
    return mean_q_sq / math.pi


# exposed for sweeps that already hold a model
def small_q_for(model: ForcingModel, *, check: bool = True) -> ApproxRate:
    af = _fixed_af(model, "gamma_small_q")
    mom = moments_of(model)
    if not isinstance(model.q_law, (SymmetricUniformQ, ShiftedUniformQ, UniformQ, ConstantQ)):
        raise InvalidParameterError("unknown q law")
    return gamma_small_q(af, mom.mean_q_sq, mean_q=mom.mean_q, q_ref=mom.mean_abs_q, check=check)
