"""Numerical Rost barriers: boundaries s_+ and s_- whose first hitting time
by Brownian motion started from nu embeds a target law mu."""

from .errors import (
    ConfigError,
    InsufficientSamples,
    MeasureError,
    NoSignChange,
    NumericalDomainError,
    RostBarrierError,
    SweepDivergence,
    UnsupportedSampling,
)
from .kernel import expected_local_time, heat_kernel
from .measures import Atom, Cantor, Exponential, Measure, Normal, Polynomial, Uniform, cdf, hat_b, support_info
from .solver import (
    BarrierProblem,
    BoundaryPair,
    Diagnostics,
    Grid,
    Scheme,
    SolverConfig,
    generalized_inverse,
    kernel_mass,
    residual,
    solve_boundaries,
)
from .value import (
    LatticeSpec,
    lattice_value,
    oracle_report,
    payoff_G,
    value_U_kernel,
    value_U_localtime,
)
from .verify import EmbeddingSample, EmbeddingSamples, MCConfig, embedding_test, simulate_embedding

__all__ = [
    "Atom",
    "BarrierProblem",
    "BoundaryPair",
    "Cantor",
    "ConfigError",
    "Diagnostics",
    "EmbeddingSample",
    "EmbeddingSamples",
    "Exponential",
    "Grid",
    "InsufficientSamples",
    "LatticeSpec",
    "MCConfig",
    "Measure",
    "MeasureError",
    "NoSignChange",
    "Normal",
    "NumericalDomainError",
    "Polynomial",
    "RostBarrierError",
    "Scheme",
    "SolverConfig",
    "SweepDivergence",
    "Uniform",
    "UnsupportedSampling",
    "cdf",
    "embedding_test",
    "expected_local_time",
    "generalized_inverse",
    "hat_b",
    "heat_kernel",
    "kernel_mass",
    "lattice_value",
    "oracle_report",
    "payoff_G",
    "residual",
    "simulate_embedding",
    "solve_boundaries",
    "support_info",
    "value_U_kernel",
    "value_U_localtime",
]
