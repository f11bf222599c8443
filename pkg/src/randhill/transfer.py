"""Per-cycle transfer matrices and overflow-safe products.

The state ``(y, dy/dt)`` is carried across one period by
``F(pi/2) @ K(q) @ F(pi/2)``: free harmonic motion up to the barrier at
``t = pi/2``, the velocity kick ``v -> v - q y``, and free motion to ``t = pi``.
Building the matrix this way never divides by ``g``, so it stays regular at
``af = n**2`` where the kick decouples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NonFiniteError, SingularAngleError
from .model import CycleParams

__all__ = [
    "TransferMatrix",
    "ProductState",
    "free_propagator",
    "kick",
    "cycle_matrix",
    "closed_form_elements",
    "elements",
    "absorb",
    "identity_state",
    "ratio_x",
    "correction_phi",
    "log_spectral_radius",
    "SINGULAR_TOL",
]

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class TransferMatrix:
    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, a) -> "TransferMatrix":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        a, b = self, other
        return TransferMatrix(
            a.m11 * b.m11 + a.m12 * b.m21,
            a.m11 * b.m12 + a.m12 * b.m22,
            a.m21 * b.m11 + a.m22 * b.m21,
            a.m21 * b.m12 + a.m22 * b.m22,
        )

    def scaled(self, c: float) -> "TransferMatrix":
        return TransferMatrix(c * self.m11, c * self.m12, c * self.m21, c * self.m22)

    def divided(self, c: float) -> "TransferMatrix":
        return TransferMatrix(self.m11 / c, self.m12 / c, self.m21 / c, self.m22 / c)

    def apply(self, y: float, v: float) -> tuple[float, float]:
        return self.m11 * y + self.m12 * v, self.m21 * y + self.m22 * v

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    def max_abs(self) -> float:
        return max(abs(self.m11), abs(self.m12), abs(self.m21), abs(self.m22))

    def is_finite(self) -> bool:
        return all(math.isfinite(x) for x in (self.m11, self.m12, self.m21, self.m22))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.as_array())


def free_propagator(omega: float, t: float) -> TransferMatrix:
    """Exact flow of ``y'' + omega**2 y = 0`` over time ``t``."""
    c, s = math.cos(omega * t), math.sin(omega * t)
    return TransferMatrix(c, s / omega, -omega * s, c)


def kick(q: float) -> TransferMatrix:
    return TransferMatrix(1.0, 0.0, -q, 1.0)


def cycle_matrix(p: CycleParams) -> TransferMatrix:
    if not p.af > 0.0:
        raise InvalidParameterError(f"af must be > 0, got {p.af!r}")
    half = free_propagator(p.omega, 0.5 * math.pi)
    return half @ kick(p.q) @ half


def closed_form_elements(p: CycleParams) -> tuple[float, float]:
    """``(h, g)`` = diagonal and lower-left entries of the cycle matrix."""
    if not p.af > 0.0:
        raise InvalidParameterError(f"af must be > 0, got {p.af!r}")
    w = math.sqrt(p.af)
    phi = w * math.pi
    h = math.cos(phi) - p.q / (2.0 * w) * math.sin(phi)
    g = -w * math.sin(phi) - p.q * math.cos(0.5 * phi) ** 2
    return h, g


def elements(af, q):
    """Vectorised ``(h, g)`` for arrays of ``af`` and ``q``."""
    af = np.asarray(af, dtype=float)
    q = np.asarray(q, dtype=float)
    w = np.sqrt(af)
    phi = w * np.pi
    s = np.sin(phi)
    h = np.cos(phi) - q / (2.0 * w) * s
    g = -w * s - q * np.cos(0.5 * phi) ** 2
    return h, g


def log_spectral_radius(h):
    """``log(|h| + sqrt(h**2 - 1))`` for hyperbolic cycles, 0 for elliptic ones."""
    a = np.abs(np.asarray(h, dtype=float))
    out = np.zeros_like(a)
    hyp = a > 1.0
    out[hyp] = np.arccosh(a[hyp])
    return out if out.ndim else float(out)


def ratio_x(p: CycleParams) -> float:
    """``x = h / g`` written so that it has a finite large-q limit."""
    phi = p.phi
    s, c = math.sin(phi), math.cos(phi)
    num = p.q * (math.pi / phi) * s - 2.0 * c
    den = p.q * (1.0 + c) + 2.0 * (phi / math.pi) * s
    if abs(den) < SINGULAR_TOL:
        raise SingularAngleError(f"ratio_x denominator vanishes at af={p.af!r}, q={p.q!r}")
    return num / den


def correction_phi(p: CycleParams) -> float:
    """The factor ``1 - 1/h**2`` (not the rotation angle)."""
    phi = p.phi
    den = math.pi * p.q * math.sin(phi) - 2.0 * phi * math.cos(phi)
    if abs(den) < SINGULAR_TOL:
        raise SingularAngleError(f"correction_phi denominator vanishes at af={p.af!r}, q={p.q!r}")
    return 1.0 - (2.0 * phi / den) ** 2


def ratio_x_array(af, q):
    af = np.asarray(af, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = np.sqrt(af) * np.pi
    s, c = np.sin(phi), np.cos(phi)
    num = q * (np.pi / phi) * s - 2.0 * c
    den = q * (1.0 + c) + 2.0 * (phi / np.pi) * s
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise SingularAngleError("ratio_x denominator vanishes for some samples")
    return num / den


def correction_phi_array(af, q):
    af = np.asarray(af, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = np.sqrt(af) * np.pi
    den = np.pi * q * np.sin(phi) - 2.0 * phi * np.cos(phi)
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise SingularAngleError("correction_phi denominator vanishes for some samples")
    return 1.0 - (2.0 * phi / den) ** 2


# --- products ---------------------------------------------------------------


@dataclass(frozen=True)
class ProductState:
    """A matrix product stored as ``normalized * exp(log_norm)``.

    ``normalized`` always has max-abs entry 1 once at least one matrix has
    been absorbed.
    """

    normalized: TransferMatrix
    log_norm: float = 0.0
    count: int = 0

    def reconstruct(self) -> TransferMatrix:
        return self.normalized.scaled(math.exp(self.log_norm))


def identity_state() -> ProductState:
    return ProductState(TransferMatrix.identity(), 0.0, 0)


def absorb(state: ProductState, m: TransferMatrix) -> ProductState:
    """Left-multiply the product by ``m`` and renormalise by the max-abs entry."""
    if not m.is_finite():
        raise NonFiniteError(f"non-finite transfer matrix {m!r}")
    prod = m @ state.normalized
    scale = prod.max_abs()
    if not (scale > 0.0 and math.isfinite(scale)):
        raise NonFiniteError(f"degenerate product after {state.count + 1} cycles")
    return ProductState(prod.divided(scale), state.log_norm + math.log(scale), state.count + 1)
