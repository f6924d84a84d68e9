"""Sparse discovery of hyperelastic strain-energy functions with L1 regularisation."""

__version__ = "0.1.0"

from .core_sparse import (
    Path,
    PathKnot,
    QuadraticProblem,
    SolverConfig,
    cd_solve,
    interpolate_path,
    kkt_violation,
    lars_lasso_path,
    lars_path,
    normalize_columns,
    ols_solve,
    soft_threshold,
)
from .datasets import SamplingGrid, TruthModel, add_noise, generate_truth, read_csv, write_csv
from .discovery import (
    CD,
    DiscoveryReport,
    Ista,
    LarsLasso,
    Pathwise,
    debias_refit,
    mismatch_plateau,
    parse_selection,
    run_linear_discovery,
    run_nonlinear_discovery,
    select_knot,
    sparsity_target,
)
from .estimators import HyperelasticDiscovery, LassoCD
from .exceptions import *  # noqa: F401,F403
from .hyperelastic import (
    Dataset,
    HyperelasticLibrary,
    LoadCase,
    MaterialParams,
    kinematics,
    model_stress,
    nonlinear_objective,
)
from .proximal import IstaConfig, SmoothObjective, check_gradient, ista_solve, pathwise_ista, prox_l1
