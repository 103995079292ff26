"""Free-rider game for federated learning: utilities, equilibria, optimum and dynamics."""

__version__ = "0.1.0"

from .accuracy import AccuracyTable, config_hash, parametric_curve, saturating_curve
from .config import dumps_game, load_game, loads_game, save_game
from .equilibrium import (
    EquilibriumKind,
    EquilibriumResult,
    GlobalOptimum,
    best_response,
    best_response_iteration,
    global_optimum,
    indifference_residual,
    optimality_gap,
    solve,
    symmetric_equilibria,
    symmetric_equilibrium,
    two_player_equilibria,
    verify_equilibrium,
)
from .errors import (
    ConfigError,
    DivergedTrainingError,
    FreeRiderError,
    InstanceTooLargeError,
    ModelIncompleteError,
    NonConvergenceError,
    UndefinedGapError,
)
from .fictitious import fp_run, fp_step
from .game import (
    GameSpec,
    Role,
    StrategyProfile,
    SubsetTable,
    SymmetricCurve,
    client_expected_utility,
    reward_table_from_accuracy,
    total_utility,
    utility_free,
    utility_participate,
)
