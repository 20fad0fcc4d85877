"""Distributionally robust two-class testing over Wasserstein balls."""

from .classify import Evaluation, KnnBaseline, LabeledDataset, LfdClassifier, evaluate, knn_baseline, knn_detect
from .core import (
    BadCovariance,
    Coupling,
    CostMatrix,
    DimensionMismatch,
    DiscreteDistribution,
    EmptyDataset,
    Infeasible,
    InvalidRadius,
    LengthMismatch,
    LfdSolution,
    LipschitzViolation,
    NegativeWeight,
    RadiusStep,
    RadiusTrace,
    SolverFailure,
    SupportTooSmall,
    WdlfdError,
    WeightSumOutOfTolerance,
    pooled_support,
    validate_distribution,
)
from .lfd import (
    detector,
    kantorovich_witness,
    kr_dual_bound,
    pointwise_risk,
    solve_lfd,
    solve_lfd_penalized,
    solve_lfd_separated,
    surrogate_risk,
    triangle_feasible,
    verify_separation,
)
from .radius import ClassUncertaintyModel, chi2_pvalue, initialize_model, learn_radii, learn_radii_from_models
from .transport import barycenter, cost_matrix, exact_ot, max_cost_coupling, sinkhorn, wasserstein

__version__ = "0.1.0"
