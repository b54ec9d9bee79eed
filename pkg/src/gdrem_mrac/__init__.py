"""Model reference adaptive control with generalized DREM parameter estimation."""
from ._jit import backend
from .errors import (
    ConfigError,
    GdremError,
    IntegrationError,
    ModelMismatchError,
    NumericalFailure,
    RankDeficiencyError,
    ShapeError,
    StabilityError,
    SymmetryError,
)
from .estimators import ESTIMATORS, EstimatorConfig
from .gdrem import GdremConfig, GdremState
from .mrac import MracSystem, Regressor, Schedule, compute_gains
from .sim import ScenarioConfig, Trace, build_case, build_unexcited_case, rk4_step, run_scenario

__version__ = "0.1.0"
