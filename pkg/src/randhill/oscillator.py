"""Trajectory-level checks that do not use the closed-form cycle matrix.

* ``integrate_cycle`` moves one phase-space point across a period, either by
  composing free rotations with the velocity kick or by RK4 integration with
  the delta barrier replaced by a narrow top-hat.
* ``ensemble_energy_growth`` follows an ensemble of trajectories and fits the
  exponential growth of ``<y**2>`` (the diffusion picture for small q).
* ``iterative_map_growth`` evaluates the heuristic one-dimensional map
  ``gamma ~ < log|1 - q_k y_k / V_k| >``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, NonFiniteError, SingularAngleError
from .lyapunov import GrowthEstimate
from .model import CycleParams, FixedAf, ForcingModel, moments_of, sample_arrays
from .rng import RandomStream
from .transfer import free_propagator, kick

__all__ = [
    "PhaseState",
    "EnergyGrowth",
    "integrate_cycle",
    "ensemble_energy_growth",
    "iterative_map_growth",
    "PHASE_LAWS",
]

PHASE_LAWS = ("uniform_random", "uniform_averaged", "trajectory")
TAN_CUTOFF = 1e6


@dataclass(frozen=True)
class PhaseState:
    y: float
    v: float

    def energy(self, af: float) -> float:
        return 0.5 * (self.v * self.v + af * self.y * self.y)


def integrate_cycle(
    p: CycleParams,
    s: PhaseState,
    method: str = "exact",
    *,
    width: float | None = None,
    step: float = 1e-4,
) -> PhaseState:
    """Advance ``s`` from ``t = 0`` to ``t = pi``.

    ``method="smoothed"`` replaces the delta barrier by a top-hat of the
    given ``width`` (``0 < width < 0.1``) and area ``q`` centred on ``pi/2``.
    """
    if method == "exact":
        half = free_propagator(p.omega, 0.5 * math.pi)
        y, v = half.apply(s.y, s.v)
        y, v = kick(p.q).apply(y, v)
        return PhaseState(*half.apply(y, v))
    if method != "smoothed":
        raise InvalidParameterError(f"method must be 'exact' or 'smoothed', got {method!r}")
    if width is None or not 0.0 < width < 0.1:
        raise InvalidParameterError(f"smoothed barrier needs 0 < width < 0.1, got {width!r}")
    if not step > 0.0:
        raise InvalidParameterError(f"step must be > 0, got {step!r}")
    outer = 0.5 * (math.pi - width)
    seg_len = np.array([outer, width, outer])
    seg_k2 = np.array([p.af, p.af + p.q / width, p.af])
    n_out = math.ceil(outer / step)
    # resolve both the step size and the fast oscillation inside the barrier
    n_in = max(20, math.ceil(width / step), math.ceil(20.0 * width * math.sqrt(abs(seg_k2[1]))))
    seg_steps = np.array([n_out, n_in, n_out], dtype=np.int64)
    y, v = _kernels.rk4_piecewise(float(s.y), float(s.v), seg_len, seg_k2, seg_steps)
    return PhaseState(float(y), float(v))


@dataclass(frozen=True)
class EnergyGrowth:
    """Fitted exponential rate of ``<y**2>`` per unit time.

    ``half_rate`` is the corresponding amplitude rate; ``predicted`` is the
    diffusion value ``<q**2> / (pi af)``.
    """

    rate: float
    stderr: float
    half_rate: float
    predicted: float
    n_traj: int
    n_cycles: int
    t: np.ndarray = field(repr=False, compare=False)
    mean_y2: np.ndarray = field(repr=False, compare=False)


def _fit_slope(t: np.ndarray, logy: np.ndarray) -> float:
    tc = t - t.mean()
    return float(np.dot(tc, logy - logy.mean()) / np.dot(tc, tc))


def ensemble_energy_growth(
    af: float,
    model: ForcingModel,
    n_traj: int = 4000,
    n_cycles: int = 4000,
    seed: int = 0,
    *,
    n_groups: int = 10,
) -> EnergyGrowth:
    """Least-squares slope of ``log <y**2>`` against ``t = pi k``.

    Every trajectory starts at energy 1 with a uniformly random phase and
    draws its forcing from its own substream.  The first 10% of cycles are
    left out of the fit.  ``stderr`` is the spread of the slopes fitted on
    ``n_groups`` disjoint blocks of trajectories.
    """
    if not af > 0.0:
        raise InvalidParameterError(f"af must be > 0, got {af!r}")
    if n_traj < 1000:
        raise InvalidParameterError(f"n_traj must be >= 1000, got {n_traj}")
    if n_cycles < 20:
        raise InvalidParameterError(f"n_cycles must be >= 20, got {n_cycles}")
    if n_traj % n_groups:
        raise InvalidParameterError("n_traj must be a multiple of n_groups")
    model = model.with_af(af)
    mom = moments_of(model)
    if mom.mean_q_sq / af > 0.01:
        warnings.warn(
            f"<q^2>/af = {mom.mean_q_sq / af:.3g} exceeds 0.01; the diffusion picture may not apply",
            RuntimeWarning,
            stacklevel=2,
        )
    predicted = mom.mean_q_sq / (math.pi * af)

    streams = [RandomStream(seed, j) for j in range(n_traj)]
    theta = np.array([2.0 * math.pi * st.uniform_aux(1)[0] for st in streams])
    y = math.sqrt(2.0 / af) * np.cos(theta)
    v = math.sqrt(2.0) * np.sin(theta)

    w = math.sqrt(af)
    c, s = math.cos(0.5 * math.pi * w), math.sin(0.5 * math.pi * w)
    y2 = np.empty((n_groups, n_cycles + 1))
    y2[:, 0] = (y * y).reshape(n_groups, -1).mean(axis=1)
    chunk = 256
    k = 0
    while k < n_cycles:
        m = min(chunk, n_cycles - k)
        q = np.stack([model.q_from_uniform(st.uniform_q(m)) for st in streams], axis=1)
        for i in range(m):
            y1 = c * y + (s / w) * v
            v1 = c * v - (w * s) * y - q[i] * y1
            y = c * y1 + (s / w) * v1
            v = c * v1 - (w * s) * y1
            k += 1
            y2[:, k] = (y * y).reshape(n_groups, -1).mean(axis=1)
    if not np.all(np.isfinite(y2)):
        raise NonFiniteError("ensemble diverged")

    t = math.pi * np.arange(n_cycles + 1)
    start = math.ceil(0.1 * n_cycles)
    tt = t[start:]
    mean_y2 = y2.mean(axis=0)
    rate = _fit_slope(tt, np.log(mean_y2[start:]))
    group_rates = np.array([_fit_slope(tt, np.log(row[start:])) for row in y2])
    stderr = float(np.std(group_rates, ddof=1) / math.sqrt(n_groups))
    return EnergyGrowth(rate, stderr, 0.5 * rate, predicted, n_traj, n_cycles, t, mean_y2)


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    return math.fsum(x) / n, float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def iterative_map_growth(
    model: ForcingModel, n: int = 100_000, seed: int = 0, phase_law: str = "uniform_random"
) -> GrowthEstimate:
    """Heuristic rate ``< log|1 - q_k y_k / V_k| >`` with ``y/V = F / sqrt(af)``.

    ``uniform_random``: ``F = tan(theta)``, theta uniform on ``[0, pi)``;
    draws with ``|F| > 1e6`` are discarded together with their q.
    ``uniform_averaged``: the same law with theta integrated out exactly,
    which gives ``(1/2) log(1 + q**2/af)`` per cycle and no phase noise.
    ``trajectory``: ``y/V`` read off an actual trajectory just before each kick.
    """
    if n < 10_000:
        raise InvalidParameterError(f"n must be >= 10000, got {n}")
    if phase_law not in PHASE_LAWS:
        raise InvalidParameterError(f"phase_law must be one of {PHASE_LAWS}, got {phase_law!r}")
    stream = RandomStream(seed, 0)
    af, q = sample_arrays(model, stream, n)
    estimator = f"map_{phase_law}"

    if phase_law == "uniform_averaged":
        terms = 0.5 * np.log1p(q * q / af)
    elif phase_law == "uniform_random":
        F = np.tan(math.pi * stream.uniform_aux(n))
        keep = np.abs(F) <= TAN_CUTOFF
        terms = np.log(np.abs(1.0 - q[keep] * F[keep] / np.sqrt(af[keep])))
    else:
        if not isinstance(model.af_law, FixedAf):
            raise InvalidParameterError("the trajectory phase law needs a fixed-af model")
        theta = 2.0 * math.pi * stream.uniform_aux(1)[0]
        terms = np.empty(n)
        *_, bad = _kernels.map_trajectory(model.af_law.af, q, math.cos(theta), math.sin(theta), terms)
        if bad >= 0:
            raise SingularAngleError(f"V = 0 before the kick in cycle {bad}")
        # successive terms are correlated; use batch means for the error bar
        nb = 50
        usable = (n // nb) * nb
        gamma = math.fsum(terms) / n
        batches = terms[:usable].reshape(nb, -1).mean(axis=1)
        stderr = float(np.std(batches, ddof=1) / math.sqrt(nb))
        return GrowthEstimate(gamma, stderr, n, 1, estimator)

    if not np.all(np.isfinite(terms)):
        raise NonFiniteError("non-finite map term")
    gamma, stderr = _mean_stderr(terms)
    return GrowthEstimate(gamma, stderr, terms.size, 1, estimator)
