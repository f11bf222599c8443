from __future__ import annotations


class RandHillError(Exception):
    """Base class for errors raised by randhill."""


class InvalidParameterError(RandHillError, ValueError):
    pass


class SingularAngleError(RandHillError, ArithmeticError):
    """A closed-form ratio has a vanishing denominator (af close to n**2)."""


class ResonanceError(RandHillError, ValueError):
    """The requested af sits inside a resonance zone where an approximation fails.

    ``nearest_n`` is the integer whose square is closest to af and ``width``
    is the zone width used for the check.
    """

    def __init__(self, af: float, nearest_n: int, width: float, what: str = ""):
        self.af = af
        self.nearest_n = nearest_n
        self.width = width
        prefix = f"{what}: " if what else ""
        super().__init__(
            f"{prefix}af={af!r} is resonant: |af - {nearest_n}^2| = "
            f"{abs(af - nearest_n**2):.6g} inside guard zone of width {width:.6g}"
        )


class NonFiniteError(RandHillError, FloatingPointError):
    """A cycle produced a non-finite matrix entry."""
