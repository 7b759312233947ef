"""Stability selection: subsampled sparse estimators with finite-sample
false-discovery control, plus simulation designs and diagnostics."""

from .control import (
    ControlSpec,
    LambdaMinResult,
    calibrate_q,
    calibrate_threshold,
    ev_bound,
    lambda_min_for_q,
    lambda_min_from_frequencies,
)
from .data import (
    CoefficientPath,
    Dataset,
    LambdaGrid,
    SelectionSet,
    load_csv,
    normalize_columns,
)
from .engine import (
    FrequencyMatrix,
    SimultaneousFrequencyMatrix,
    StabilityResult,
    constant_selector,
    glasso_selector,
    group_selector,
    lasso_selector,
    omp_selector,
    pointwise_stability,
    randomised_lasso_selector,
    romp_selector,
    selection_frequencies,
    selection_frequencies_exact,
    simultaneous_frequencies,
    simultaneous_frequencies_exact,
    stable_set,
    subsample,
)
from .errors import ConfigError, ConvergenceError, DataError, NumericalError, StabselError
from .solvers import (
    OmpTrace,
    PrecisionEstimate,
    WeightVector,
    graphical_lasso,
    lasso_path,
    omp,
    randomised_lasso_path,
    romp,
)

__version__ = "0.1.0"
