"""Recover parameters of an LFT-parametrized LTI plant from tangential interpolation data."""

from .exceptions import (
    DimensionMismatch,
    DimensionOrder,
    IllPosed,
    InapplicableCase,
    LftRecoverError,
    NonFinite,
    ParseError,
    NumericalError,
    SharedEigenvalue,
    SingularResolvent,
    SizeError,
)
from .interpolation import InterpSpec, Rtim, compute_rtim, derivative_oracle, load_spec, solve_x
from .lft import LftPlant, ParamBox, assemble_system, load_plant, psi_matrix, save_plant, transfer_value
from .recoverability import (
    RecoverabilityVerdict,
    SamplingPlan,
    check_identifiability,
    check_recoverability_sampled,
    necessary_conditions,
)
from .recovery import AlphaVec, RecoveryConfig, RecoveryResult, build_problem, recover
from .robustness import RobustnessReport, check_robustness

__version__ = "0.1.0"
