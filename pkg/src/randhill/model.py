"""Cycle parameters and the forcing laws they are drawn from.

A cycle of the random Hill's equation ``y'' + [af_k + q_k * delta([t] - pi/2)] y = 0``
(period pi) is fixed by the pair ``(af_k, q_k)``.  A :class:`ForcingModel`
combines a law for ``q`` with a law for ``af``; both are driven by uniform
draws from a :class:`~randhill.rng.RandomStream` so that every model consumes
exactly one ``q`` uniform (and one ``af`` uniform when af is random) per cycle.
"""
from __future__ import annotations

import math
import shlex
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import InvalidParameterError
from .rng import RandomStream

__all__ = [
    "CycleParams",
    "ConstantQ",
    "ShiftedUniformQ",
    "SymmetricUniformQ",
    "UniformQ",
    "FixedAf",
    "UniformAngle",
    "ForcingModel",
    "QMoments",
    "sample_cycle",
    "sample_arrays",
    "moments_of",
    "parse_model",
]


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class CycleParams:
    """One cycle's ``(af, q)``; ``phi = sqrt(af) * pi`` is the free rotation angle."""

    af: float
    q: float

    def __post_init__(self):
        af = _finite("af", self.af)
        if af <= 0.0:
            raise InvalidParameterError(f"af must be > 0, got {af!r}")
        object.__setattr__(self, "af", af)
        object.__setattr__(self, "q", _finite("q", self.q))

    @property
    def omega(self) -> float:
        return math.sqrt(self.af)

    @property
    def phi(self) -> float:
        return math.sqrt(self.af) * math.pi


# --- q laws ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantQ:
    q: float

    def __post_init__(self):
        object.__setattr__(self, "q", _finite("q", self.q))

    @property
    def lo(self) -> float:
        return self.q

    @property
    def span(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ShiftedUniformQ:
    """``q = (1 + xi) * q0`` with ``xi`` uniform on [0, 1]; mean ``3 q0 / 2``."""

    q0: float

    def __post_init__(self):
        if _finite("q0", self.q0) <= 0.0:
            raise InvalidParameterError(f"q0 must be > 0, got {self.q0!r}")
        object.__setattr__(self, "q0", float(self.q0))

    @property
    def lo(self) -> float:
        return self.q0

    @property
    def span(self) -> float:
        return self.q0


@dataclass(frozen=True)
class SymmetricUniformQ:
    """``q = q0 * xi`` with ``xi`` uniform on [-1, 1]."""

    q0: float

    def __post_init__(self):
        if _finite("q0", self.q0) <= 0.0:
            raise InvalidParameterError(f"q0 must be > 0, got {self.q0!r}")
        object.__setattr__(self, "q0", float(self.q0))

    @property
    def lo(self) -> float:
        return -self.q0

    @property
    def span(self) -> float:
        return 2.0 * self.q0


@dataclass(frozen=True)
class UniformQ:
    """``q`` uniform on ``[lo, hi]``; the two named uniform laws are special cases."""

    low: float
    high: float

    def __post_init__(self):
        lo, hi = _finite("low", self.low), _finite("high", self.high)
        if not hi > lo:
            raise InvalidParameterError(f"need high > low, got [{lo}, {hi}]")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @property
    def lo(self) -> float:
        return self.low

    @property
    def span(self) -> float:
        return self.high - self.low


QLaw = Union[ConstantQ, ShiftedUniformQ, SymmetricUniformQ, UniformQ]


# --- af laws --------------------------------------------------------------


@dataclass(frozen=True)
class FixedAf:
    af: float

    def __post_init__(self):
        if _finite("af", self.af) <= 0.0:
            raise InvalidParameterError(f"af must be > 0, got {self.af!r}")
        object.__setattr__(self, "af", float(self.af))


@dataclass(frozen=True)
class UniformAngle:
    """Angle ``phi`` uniform on ``(0, gamma]`` and ``af = (phi / pi)**2``.

    The law is uniform in ``phi``, not in ``af``.
    """

    gamma: float

    def __post_init__(self):
        if _finite("gamma", self.gamma) <= 0.0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma!r}")
        object.__setattr__(self, "gamma", float(self.gamma))


AfLaw = Union[FixedAf, UniformAngle]


@dataclass(frozen=True)
class ForcingModel:
    q_law: QLaw
    af_law: AfLaw

    def __post_init__(self):
        if not isinstance(self.q_law, (ConstantQ, ShiftedUniformQ, SymmetricUniformQ, UniformQ)):
            raise InvalidParameterError(f"unknown q law {self.q_law!r}")
        if not isinstance(self.af_law, (FixedAf, UniformAngle)):
            raise InvalidParameterError(f"unknown af law {self.af_law!r}")

    @classmethod
    def constant(cls, q: float, af: float) -> "ForcingModel":
        return cls(ConstantQ(q), FixedAf(af))

    @classmethod
    def shifted(cls, q0: float, af: float) -> "ForcingModel":
        return cls(ShiftedUniformQ(q0), FixedAf(af))

    @classmethod
    def symmetric(cls, q0: float, af: float) -> "ForcingModel":
        return cls(SymmetricUniformQ(q0), FixedAf(af))

    @property
    def fixed_af(self) -> float | None:
        return self.af_law.af if isinstance(self.af_law, FixedAf) else None

    @property
    def is_degenerate(self) -> bool:
        """True when every cycle is identical (constant q at fixed af)."""
        return isinstance(self.q_law, ConstantQ) and isinstance(self.af_law, FixedAf)

    def with_af(self, af: float) -> "ForcingModel":
        return ForcingModel(self.q_law, FixedAf(af))

    def q_from_uniform(self, u):
        return self.q_law.lo + self.q_law.span * u

    def af_from_uniform(self, u):
        law = self.af_law
        if isinstance(law, FixedAf):
            return law.af + 0.0 * u
        # 1 - u lies in (0, 1], so phi never hits 0
        phi = law.gamma * (1.0 - u)
        return (phi / math.pi) ** 2

    def to_config(self) -> str:
        """Flat ``key=value`` form, e.g. ``dist=symmetric q0=0.625 af=2.0``."""
        ql, al = self.q_law, self.af_law
        if isinstance(ql, ConstantQ):
            parts = ["dist=constant", f"q={ql.q!r}"]
        elif isinstance(ql, ShiftedUniformQ):
            parts = ["dist=shifted", f"q0={ql.q0!r}"]
        elif isinstance(ql, SymmetricUniformQ):
            parts = ["dist=symmetric", f"q0={ql.q0!r}"]
        else:
            parts = ["dist=uniform", f"qlo={ql.low!r}", f"qhi={ql.high!r}"]
        if isinstance(al, FixedAf):
            parts.append(f"af={al.af!r}")
        else:
            parts.append(f"angle={al.gamma!r}")
        return " ".join(parts)

    @classmethod
    def from_config(cls, text: str | dict) -> "ForcingModel":
        return parse_model(text)


def parse_model(text: str | dict) -> ForcingModel:
    """Inverse of :meth:`ForcingModel.to_config`.

    Accepts a string of whitespace-separated ``key=value`` tokens or an
    already-split mapping.
    """
    if isinstance(text, dict):
        kv = {str(k): str(v) for k, v in text.items()}
    else:
        kv = {}
        for tok in shlex.split(text):
            if "=" not in tok:
                raise InvalidParameterError(f"expected key=value, got {tok!r}")
            key, _, val = tok.partition("=")
            kv[key.strip()] = val.strip()
    known = {"dist", "q", "q0", "qlo", "qhi", "af", "angle"}
    extra = set(kv) - known
    if extra:
        raise InvalidParameterError(f"unknown model keys: {sorted(extra)}")

    def num(key):
        if key not in kv:
            raise InvalidParameterError(f"model config needs {key}=...")
        try:
            return float(kv[key])
        except ValueError:
            raise InvalidParameterError(f"{key} must be a number, got {kv[key]!r}") from None

    dist = kv.get("dist", "constant")
    if dist == "constant":
        q_law = ConstantQ(num("q"))
    elif dist == "shifted":
        q_law = ShiftedUniformQ(num("q0"))
    elif dist == "symmetric":
        q_law = SymmetricUniformQ(num("q0"))
    elif dist == "uniform":
        q_law = UniformQ(num("qlo"), num("qhi"))
    else:
        raise InvalidParameterError(f"unknown dist {dist!r}")
    if "af" in kv and "angle" in kv:
        raise InvalidParameterError("give either af= or angle=, not both")
    if "angle" in kv:
        af_law = UniformAngle(num("angle"))
    else:
        af_law = FixedAf(num("af"))
    return ForcingModel(q_law, af_law)


# --- sampling -------------------------------------------------------------


def sample_cycle(model: ForcingModel, stream: RandomStream) -> CycleParams:
    q = float(model.q_from_uniform(stream.uniform_q(1)[0]))
    if isinstance(model.af_law, FixedAf):
        af = model.af_law.af
    else:
        af = float(model.af_from_uniform(stream.uniform_af(1)[0]))
    return CycleParams(af, q)


def sample_arrays(model: ForcingModel, stream: RandomStream, n: int):
    """``n`` consecutive cycles as ``(af, q)`` arrays; same draws as ``n`` calls of sample_cycle."""
    q = model.q_from_uniform(stream.uniform_q(n))
    if isinstance(model.af_law, FixedAf):
        af = np.full(n, model.af_law.af)
    else:
        af = model.af_from_uniform(stream.uniform_af(n))
    return af, q


# --- analytic moments -----------------------------------------------------


class QMoments(NamedTuple):
    mean_q: float
    mean_q_sq: float
    var_q: float
    mean_af: float
    mean_abs_q: float


def _uniform_moments(lo: float, hi: float):
    mean = 0.5 * (lo + hi)
    mean_sq = (lo * lo + lo * hi + hi * hi) / 3.0
    var = (hi - lo) ** 2 / 12.0
    if lo >= 0.0:
        mabs = mean
    elif hi <= 0.0:
        mabs = -mean
    else:
        mabs = (lo * lo + hi * hi) / (2.0 * (hi - lo))
    return mean, mean_sq, var, mabs


def moments_of(model: ForcingModel) -> QMoments:
    ql = model.q_law
    if isinstance(ql, ConstantQ):
        mean, mean_sq, var, mabs = ql.q, ql.q * ql.q, 0.0, abs(ql.q)
    elif isinstance(ql, ShiftedUniformQ):
        q0 = ql.q0
        mean, mean_sq, var, mabs = 1.5 * q0, 7.0 * q0 * q0 / 3.0, q0 * q0 / 12.0, 1.5 * q0
    elif isinstance(ql, SymmetricUniformQ):
        q0 = ql.q0
        mean, mean_sq, var, mabs = 0.0, q0 * q0 / 3.0, q0 * q0 / 3.0, 0.5 * q0
    else:
        mean, mean_sq, var, mabs = _uniform_moments(ql.low, ql.high)
    al = model.af_law
    if isinstance(al, FixedAf):
        mean_af = al.af
    else:
        mean_af = al.gamma**2 / (3.0 * math.pi**2)
    return QMoments(mean, mean_sq, var, mean_af, mabs)
