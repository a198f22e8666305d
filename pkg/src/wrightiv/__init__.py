"""Identification and estimation of a log-linear demand/supply system.

Simulation, Frisch-Waugh partialing (OLS or LASSO), iterated and continuously
updated GMM, weak-identification robust AR/CLR confidence regions, tariff
counterfactuals and d-separation checks on the causal graph.
"""

__version__ = "0.1.0"

from .causal_dag import Dag, SeparationQuery, build_wright_dag, d_separated, parse_dag
from .counterfactual import TariffScenario, apply_tariff, optimal_tariff, pass_through
from .exceptions import (
    DegenerateSystemError,
    GraphError,
    IdentificationError,
    LassoConvergenceError,
    RidgeWarning,
    SchemaError,
    SimulationError,
    SingularCovarianceError,
    WrightError,
)
from .gmm import (
    CovarianceKernel,
    GmmFit,
    MomentSystem,
    ThetaBox,
    build_moment_system,
    cue,
    indirect_least_squares,
    iterative_gmm,
)
from .partialing import ResidualizedDataset, lasso_partial_out, partial_out
from .structural import (
    Dataset,
    ShifterSpec,
    StructuralParams,
    read_csv,
    simulate_dataset,
    solve_equilibrium,
    write_csv,
)
from .weak_id import ConfidenceRegion, ThetaGrid, ar_region, ar_statistic, clr_region

__all__ = [
    "__version__",
    "Dag",
    "SeparationQuery",
    "build_wright_dag",
    "d_separated",
    "parse_dag",
    "TariffScenario",
    "apply_tariff",
    "optimal_tariff",
    "pass_through",
    "DegenerateSystemError",
    "GraphError",
    "IdentificationError",
    "LassoConvergenceError",
    "RidgeWarning",
    "SchemaError",
    "SimulationError",
    "SingularCovarianceError",
    "WrightError",
    "CovarianceKernel",
    "GmmFit",
    "MomentSystem",
    "ThetaBox",
    "build_moment_system",
    "cue",
    "indirect_least_squares",
    "iterative_gmm",
    "ResidualizedDataset",
    "lasso_partial_out",
    "partial_out",
    "Dataset",
    "ShifterSpec",
    "StructuralParams",
    "read_csv",
    "simulate_dataset",
    "solve_equilibrium",
    "write_csv",
    "ConfidenceRegion",
    "ThetaGrid",
    "ar_region",
    "ar_statistic",
    "clr_region",
]
