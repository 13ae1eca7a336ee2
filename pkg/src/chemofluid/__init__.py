"""Finite-volume simulation and decay-rate auditing for a two-species
chemotaxis-fluid system with competitive kinetics."""

from .errors import (
    BlowUpError,
    ChemofluidError,
    ConfigError,
    InsufficientDataError,
    NoSandwichError,
    NumericError,
    ParameterError,
    StepRejectedError,
    UnsupportedRegimeError,
)
from .functionals import LyapunovSample, check_dissipation, lyapunov, norm
from .grid import DomainSpec, VectorField
from .model import (
    Equilibrium,
    ModelParams,
    PotentialSpec,
    RateConstants,
    Regime,
    classify_regime,
    equilibrium,
    rate_constants,
)
from .rates import FitResult, RateReport, TimeSeries, fit_algebraic, fit_exponential, sandwich_time, verdicts
from .solver import SolverConfig, State, default_initial_state, equilibrium_state, run, step

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "ChemofluidError", "ConfigError", "InsufficientDataError", "NoSandwichError",
    "NumericError", "ParameterError", "StepRejectedError", "UnsupportedRegimeError",
    "LyapunovSample", "check_dissipation", "lyapunov", "norm",
    "DomainSpec", "VectorField",
    "Equilibrium", "ModelParams", "PotentialSpec", "RateConstants", "Regime",
    "classify_regime", "equilibrium", "rate_constants",
    "FitResult", "RateReport", "TimeSeries", "fit_algebraic", "fit_exponential", "sandwich_time", "verdicts",
    "SolverConfig", "State", "default_initial_state", "equilibrium_state", "run", "step",
]
