"""First and second moments of the matrix elements ``h`` and ``g``.

With ``phi = sqrt(af) * pi`` the elements are

    h = cos(phi) - (pi q / (2 phi)) sin(phi)
    g = -(phi / pi) sin(phi) - (q / 2)(1 + cos(phi))

Three laws are covered: a fixed angle with random q (``fixed_angle``), phi
uniform on ``(0, Gamma]`` with constant q (``angle_avg``), and phi uniform
with q random and independent of phi (``joint``).  Only the first two
moments of q enter, so the joint forms are the constant-q ones with ``q``
and ``q**2`` replaced by ``<q>`` and ``<q**2>`` term by term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import sici

from .asymptotics import _large_q_guard
from .errors import InvalidParameterError
from .model import ConstantQ, FixedAf, ForcingModel, sample_arrays
from .rng import RandomStream
from .transfer import correction_phi_array, elements, ratio_x_array

__all__ = [
    "ElementMoments",
    "sine_integral",
    "h_moments_fixed_angle",
    "h_moments_angle_avg",
    "g_moments_fixed_angle",
    "g_moments_angle_avg",
    "h_variance_full_periods",
    "g_variance_full_periods",
    "mc_element_moments",
    "correction_variances_large_q",
    "CorrectionVariances",
]

SI_MAX = 1e5
CLIP_TOL = 1e-12


@dataclass(frozen=True)
class ElementMoments:
    mean: float
    mean_sq: float
    variance: float
    element: str
    law: str
    mean_stderr: float = 0.0
    mean_sq_stderr: float = 0.0
    variance_stderr: float = 0.0

    def __post_init__(self):
        if self.element not in ("h", "g"):
            raise InvalidParameterError(f"element must be 'h' or 'g', got {self.element!r}")
        if self.law not in ("fixed_angle", "angle_avg", "joint"):
            raise InvalidParameterError(f"unknown law tag {self.law!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @classmethod
    def from_moments(cls, mean: float, mean_sq: float, element: str, law: str) -> "ElementMoments":
        var = mean_sq - mean * mean
        if var < -CLIP_TOL * max(1.0, abs(mean_sq)):
            raise ArithmeticError(f"negative variance {var!r} for {element} ({law})")
        return cls(mean, mean_sq, max(var, 0.0), element, law)


def sine_integral(x: float) -> float:
    """``Si(x) = integral of sin(t)/t from 0 to x`` for ``0 <= x <= 1e5``."""
    x = float(x)
    if not 0.0 <= x <= SI_MAX:
        raise InvalidParameterError(f"sine_integral needs 0 <= x <= {SI_MAX:g}, got {x!r}")
    return _si(x)


def _si(x: float) -> float:
    return float(sici(x)[0])


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _check_q(q_mean: float, q_sq_mean: float):
    q_mean, q_sq_mean = float(q_mean), float(q_sq_mean)
    if q_sq_mean < q_mean * q_mean * (1.0 - 1e-12) - 1e-300:
        raise InvalidParameterError(f"<q^2> = {q_sq_mean!r} is below <q>^2 = {q_mean**2!r}")
    return q_mean, q_sq_mean


# --- fixed angle ----------------------------------------------------------


def h_moments_fixed_angle(phi: float, q_mean: float, q_sq_mean: float) -> ElementMoments:
    """``<h> = cos(phi) - k <q>`` with ``k = pi sin(phi) / (2 phi)``; hence ``sigma_h = |k| sigma_q``."""
    phi = _check_positive("phi", phi)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    c = math.cos(phi)
    k = math.pi * math.sin(phi) / (2.0 * phi)
    mean = c - k * q1
    mean_sq = c * c - 2.0 * c * k * q1 + k * k * q2
    # the variance is k^2 sigma_q^2 exactly; avoid the cancellation in mean_sq - mean^2
    return ElementMoments(mean, mean_sq, k * k * max(q2 - q1 * q1, 0.0), "h", "fixed_angle")


def g_moments_fixed_angle(phi: float, q_mean: float, q_sq_mean: float) -> ElementMoments:
    phi = _check_positive("phi", phi)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    a = phi * math.sin(phi) / math.pi
    c = 0.5 * (1.0 + math.cos(phi))
    mean = -a - c * q1
    mean_sq = a * a + 2.0 * a * c * q1 + c * c * q2
    return ElementMoments(mean, mean_sq, c * c * max(q2 - q1 * q1, 0.0), "g", "fixed_angle")


# --- angle averaged -------------------------------------------------------


def _law_tag(q_mean: float, q_sq_mean: float) -> str:
    return "angle_avg" if q_sq_mean == q_mean * q_mean else "joint"


def h_moments_angle_avg(Gamma: float, q_mean: float, q_sq_mean: float) -> ElementMoments:
    G = _check_positive("Gamma", Gamma)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    si1, si2 = _si(G), _si(2.0 * G)
    mean = math.sin(G) / G - math.pi * q1 / (2.0 * G) * si1
    mean_sq = (
        0.5
        + math.sin(2.0 * G) / (4.0 * G)
        - math.pi * q1 * si2 / (2.0 * G)
        + math.pi**2 * q2 / (4.0 * G) * (si2 - math.sin(G) ** 2 / G)
    )
    return ElementMoments.from_moments(mean, mean_sq, "h", _law_tag(q1, q2))


def g_moments_angle_avg(Gamma: float, q_mean: float, q_sq_mean: float) -> ElementMoments:
    G = _check_positive("Gamma", Gamma)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    sG, cG = math.sin(G), math.cos(G)
    s2G, c2G = math.sin(2.0 * G), math.cos(2.0 * G)
    avg_cos = sG / G
    avg_phi_sin = sG / G - cG
    avg_phi_sin_cos = 0.5 * (s2G / (4.0 * G) - 0.5 * c2G)
    avg_phi2_sin2 = G * G / 6.0 - (2.0 * G * G - 1.0) * s2G / (8.0 * G) - 0.25 * c2G
    avg_one_plus_cos_sq = 1.5 + 2.0 * avg_cos + s2G / (4.0 * G)

    mean = -avg_phi_sin / math.pi - 0.5 * q1 * (1.0 + avg_cos)
    mean_sq = (
        avg_phi2_sin2 / math.pi**2
        + q1 / math.pi * (avg_phi_sin + avg_phi_sin_cos)
        + 0.25 * q2 * avg_one_plus_cos_sq
    )
    return ElementMoments.from_moments(mean, mean_sq, "g", _law_tag(q1, q2))


def _full_periods(Gamma: float) -> int:
    G = _check_positive("Gamma", Gamma)
    m = round(G / (2.0 * math.pi))
    if m < 1 or abs(G - 2.0 * math.pi * m) > 1e-9 * G:
        raise InvalidParameterError(f"Gamma must be a positive multiple of 2*pi, got {Gamma!r}")
    return m


def h_variance_full_periods(Gamma: float, q_mean: float, q_sq_mean: float) -> float:
    """``sigma_h**2`` at ``Gamma = 2 pi m``:
    ``1/2 + (pi/(2G)) (pi <q^2>/2 - <q>) Si(2G) - (pi <q>/(2G))**2 Si(G)**2``."""
    _full_periods(Gamma)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    G = float(Gamma)
    k = math.pi / (2.0 * G)
    return 0.5 + k * (0.5 * math.pi * q2 - q1) * _si(2.0 * G) - (k * q1 * _si(G)) ** 2


def g_variance_full_periods(Gamma: float, q_mean: float, q_sq_mean: float) -> float:
    """``sigma_g**2`` at ``Gamma = 2 pi m``:
    ``(G**2/6 - 5/4)/pi**2 + (3 <q^2>/2 - <q>**2)/4 - <q>/(4 pi)``.

    Grows like ``G**2 / (6 pi**2)``, so ``sigma_g ~ sqrt(6) G / (6 pi)``.
    """
    _full_periods(Gamma)
    q1, q2 = _check_q(q_mean, q_sq_mean)
    G = float(Gamma)
    return (G * G / 6.0 - 1.25) / math.pi**2 + 0.25 * (1.5 * q2 - q1 * q1) - q1 / (4.0 * math.pi)


# --- sampling oracle ------------------------------------------------------


def _sample_moments(x: np.ndarray, element: str, law: str) -> ElementMoments:
    n = x.size
    mean = math.fsum(x) / n
    x2 = x * x
    mean_sq = math.fsum(x2) / n
    d = x - mean
    m2 = math.fsum(d * d) / n
    m4 = math.fsum(d**4) / n
    var = m2 * n / (n - 1)
    return ElementMoments(
        mean,
        mean_sq,
        var,
        element,
        law,
        mean_stderr=math.sqrt(var / n),
        mean_sq_stderr=float(np.std(x2, ddof=1)) / math.sqrt(n),
        variance_stderr=math.sqrt(max(m4 - m2 * m2, 0.0) / n),
    )


def mc_element_moments(model: ForcingModel, n: int = 100_000, seed: int = 0):
    """Sample moments of ``(h, g)`` over ``n`` iid cycles of ``model``."""
    if n < 10_000:
        raise InvalidParameterError(f"n must be >= 10000, got {n}")
    af, q = sample_arrays(model, RandomStream(seed, 0), n)
    h, g = elements(af, q)
    if isinstance(model.af_law, FixedAf):
        law = "fixed_angle"
    else:
        law = "angle_avg" if isinstance(model.q_law, ConstantQ) else "joint"
    if model.is_degenerate:
        h0, g0 = float(h[0]), float(g[0])
        return (
            ElementMoments(h0, h0 * h0, 0.0, "h", law),
            ElementMoments(g0, g0 * g0, 0.0, "g", law),
        )
    return _sample_moments(h, "h", law), _sample_moments(g, "g", law)


class CorrectionVariances(NamedTuple):
    var_x: float
    var_phi: float


def correction_variances_large_q(model: ForcingModel, n: int = 100_000, seed: int = 0) -> CorrectionVariances:
    """Sample variances of ``x = h/g`` and of ``1 - 1/h**2`` for a large-q model."""
    lo, span = model.q_law.lo, model.q_law.span
    if min(abs(lo), abs(lo + span)) < 10.0 or lo < 0.0 < lo + span:
        raise InvalidParameterError("correction_variances_large_q needs min |q| >= 10")
    af = _large_q_guard(model, "correction_variances_large_q")
    if model.is_degenerate:
        return CorrectionVariances(0.0, 0.0)
    _, q = sample_arrays(model, RandomStream(seed, 0), n)
    x = ratio_x_array(af, q)
    c = correction_phi_array(af, q)
    return CorrectionVariances(float(np.var(x, ddof=1)), float(np.var(c, ddof=1)))
