"""Nonnegative sparse recovery with Newton-direction ReLU thresholding."""
from .linalg import MeasurementMatrix, newton_apply, spectral_extremes
from .nnls import GpConfig, active_set_oracle, gradient_projection_nnls, kkt_residual
from .recovery import (ALGORITHMS, RecoveryConfig, RecoveryResult, empirical_stepsize,
                       run_recovery, theory_stepsize_window)
from .thresholding import SparseSignal, hard_threshold, relu, relu_threshold

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "GpConfig",
    "MeasurementMatrix",
    "RecoveryConfig",
    "RecoveryResult",
    "SparseSignal",
    "active_set_oracle",
    "empirical_stepsize",
    "gradient_projection_nnls",
    "hard_threshold",
    "kkt_residual",
    "newton_apply",
    "relu",
    "relu_threshold",
    "run_recovery",
    "spectral_extremes",
    "theory_stepsize_window",
]
