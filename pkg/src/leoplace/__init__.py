"""Risk-aware service chain placement over LEO constellations."""

from .config import (
    ConfigError,
    ExperimentConfig,
    MethodSpec,
    SolverSettings,
    load_config,
)
from .constellation import (
    ConstellationSnapshot,
    GroundPoint,
    WalkerConfig,
    build_snapshot,
    build_walker_star,
)
from .harness import EpochReport, run_experiment
from .placement import (
    FeasibilityReport,
    MigrationContext,
    Placement,
    validate,
)
from .risk import RiskTriple, coarse_risk, exact_risk, risk_triple
from .scenario import Scenario, ScenarioConfig, generate_scenario
from .solver import (
    BnbParams,
    NormalizationBounds,
    ObjectiveWeights,
    SaParams,
    SolveResult,
    branch_and_bound,
    brute_force,
    greedy_place,
    hybrid_solve,
    normalization_bounds,
    objective_value,
    sa_optimize,
)

__version__ = "0.1.0"

__all__ = [
    "BnbParams",
    "ConfigError",
    "ConstellationSnapshot",
    "EpochReport",
    "ExperimentConfig",
    "FeasibilityReport",
    "GroundPoint",
    "MethodSpec",
    "MigrationContext",
    "NormalizationBounds",
    "ObjectiveWeights",
    "Placement",
    "RiskTriple",
    "SaParams",
    "Scenario",
    "ScenarioConfig",
    "SolveResult",
    "SolverSettings",
    "WalkerConfig",
    "branch_and_bound",
    "brute_force",
    "build_snapshot",
    "build_walker_star",
    "coarse_risk",
    "exact_risk",
    "generate_scenario",
    "greedy_place",
    "hybrid_solve",
    "load_config",
    "normalization_bounds",
    "objective_value",
    "risk_triple",
    "run_experiment",
    "sa_optimize",
    "validate",
    "__version__",
]
