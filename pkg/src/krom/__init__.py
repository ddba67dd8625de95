"""Exact-moment random orthogonal matrix simulation with Kollo skewness targeting."""

from __future__ import annotations

__version__ = "0.1.0"

from .exceptions import (
    AdmissibilityExhausted,
    KromError,
    NotAdmissible,
    ParseError,
)
from .moments import (
    coskewness,
    kollo_skewness,
    mardia_skewness,
    rotate_skewness,
    sample_mean_cov,
)
from .orthobasis import RotationBasis, build_omega, validate_scaled_L
from .simulation import (
    SimulationSample,
    SolveConfig,
    TargetMoments,
    concatenate,
    getm,
    krom_simulate,
    moment_errors,
)
from .valuegen import (
    BootstrapSource,
    ParametricSource,
    ZeroSource,
    make_value_source,
)
from .estimator import KolloSkewness, KROMSimulator

__all__ = [
    "AdmissibilityExhausted",
    "BootstrapSource",
    "KROMSimulator",
    "KolloSkewness",
    "KromError",
    "NotAdmissible",
    "ParametricSource",
    "ParseError",
    "RotationBasis",
    "SimulationSample",
    "SolveConfig",
    "TargetMoments",
    "ZeroSource",
    "build_omega",
    "concatenate",
    "coskewness",
    "getm",
    "kollo_skewness",
    "krom_simulate",
    "make_value_source",
    "mardia_skewness",
    "moment_errors",
    "rotate_skewness",
    "sample_mean_cov",
    "validate_scaled_L",
]
