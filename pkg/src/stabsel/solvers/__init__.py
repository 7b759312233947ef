"""Base selection procedures wrapped by the stability engine."""

from .glasso import (
    PrecisionEstimate,
    glasso_kkt_gap,
    glasso_lambda_max,
    glasso_objective,
    graphical_lasso,
)
from .lasso import (
    WeightVector,
    lasso_kkt_gap,
    lasso_objective,
    lasso_path,
    randomised_lasso_path,
)
from .omp import OmpTrace, omp, romp

__all__ = [
    "OmpTrace",
    "PrecisionEstimate",
    "WeightVector",
    "glasso_kkt_gap",
    "glasso_lambda_max",
    "glasso_objective",
    "graphical_lasso",
    "lasso_kkt_gap",
    "lasso_objective",
    "lasso_path",
    "omp",
    "randomised_lasso_path",
    "romp",
]
