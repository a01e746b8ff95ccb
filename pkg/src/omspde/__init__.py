"""Onsager-Machlup actions and most probable paths for diagonal SPDEs with tempered-stable jumps."""

from .action import ActionBreakdown, DiscretePath, evaluate_action, path_derivative, trace_term
from .errors import ConfigError, InvalidArgument, OMError, PreconditionViolation
from .levy import (
    JumpSpec,
    TailRule,
    TemperedStable,
    TwoSidedTemperedStable,
    eta_correction,
    h4_moment,
    sample_jumps,
    square_integrability,
    variation_constant,
)
from .mcvalidate import RatioEstimate, TubeExperiment, simulate_mild, tube_ratio
from .pathopt import OptimizationResult, OptimizerConfig, action_gradient, el_residual, minimize_path
from .spectral import (
    DiagonalLinearDrift,
    NonlocalDrift,
    ScalarDrift,
    SpectralModel,
    ZeroDrift,
    scalar_function,
    semigroup_factor,
    validate_model,
)

__version__ = "0.1.0"
