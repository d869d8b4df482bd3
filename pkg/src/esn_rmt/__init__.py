"""Exact asymptotic risk of linear echo-state networks and ridge regression,
cross-validated by Monte-Carlo simulation."""

from .core import (
    CovarianceSpec,
    FeatureMapKind,
    LinearESN,
    ProblemDims,
    RidgeIdentity,
    SecondOrderStats,
    TeacherSpec,
    make_memory_teacher,
    materialize_covariance,
    memory_teacher,
)
from .datagen import Dataset, label, make_test_set, sample_inputs
from .readout import EmpiricalRisk, RidgeReadout, empirical_risk, fit, predict
from .reservoir import (
    Reservoir,
    esn_features,
    esn_second_order_stats,
    generate_reservoir,
    memory_matrix,
)
from .theory import (
    ConvergenceError,
    FixedPointSolution,
    InterpolationThresholdError,
    LeakKernel,
    OptimalRegularization,
    RiskDecomposition,
    SpectralRisk,
    TheoryError,
    effective_complexity,
    effective_esn_stats,
    esn_spectral_risk,
    minimize_lambda,
    optimal_regularization,
    risk_curve,
    risk_from_stats,
    solve_fixed_point,
)

__version__ = "0.1.0"
