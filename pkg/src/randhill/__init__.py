"""Growth rates of Hill's equation with randomly varying delta-function forcing.

    y'' + [af_k + q_k * delta([t] - pi/2)] y = 0,   period pi,

where ``(af_k, q_k)`` are redrawn independently every cycle.
"""
from importlib.metadata import PackageNotFoundError, version as _version

from .asymptotics import (
    ApproxRate,
    delta_gamma_phi,
    delta_gamma_x,
    gamma_fokker_planck,
    gamma_infinite_q,
    gamma_large_q,
    gamma_small_q,
    stability_band_width,
)
from .errors import (
    InvalidParameterError,
    NonFiniteError,
    RandHillError,
    ResonanceError,
    SingularAngleError,
)
from .lyapunov import (
    GrowthEstimate,
    asymptotic_growth_rate,
    classical_growth_rate,
    growth_rate_grid,
    growth_rate_mc,
)
from .model import (
    ConstantQ,
    CycleParams,
    FixedAf,
    ForcingModel,
    ShiftedUniformQ,
    SymmetricUniformQ,
    UniformAngle,
    UniformQ,
    parse_model,
)
from .transfer import TransferMatrix, closed_form_elements, cycle_matrix

__all__ = [
    "ApproxRate",
    "delta_gamma_phi",
    "delta_gamma_x",
    "gamma_fokker_planck",
    "gamma_infinite_q",
    "gamma_large_q",
    "gamma_small_q",
    "stability_band_width",
    "InvalidParameterError",
    "NonFiniteError",
    "RandHillError",
    "ResonanceError",
    "SingularAngleError",
    "GrowthEstimate",
    "asymptotic_growth_rate",
    "classical_growth_rate",
    "growth_rate_grid",
    "growth_rate_mc",
    "ConstantQ",
    "CycleParams",
    "FixedAf",
    "ForcingModel",
    "ShiftedUniformQ",
    "SymmetricUniformQ",
    "UniformAngle",
    "UniformQ",
    "parse_model",
    "TransferMatrix",
    "closed_form_elements",
    "cycle_matrix",
    "__version__",
]

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a bare checkout
    __version__ = "0.0.0"
