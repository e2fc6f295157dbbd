"""EVCI placement: exhaustive oracle and multi-objective swarm search."""
from .archive import (
    INFEASIBLE,
    ObjectivePair,
    ParetoArchive,
    archive_insert,
    best_compromise,
    crowding_distance,
    crowding_truncate,
    dominates,
    sigma_leader,
    sigma_value,
)
from .evaluate import evaluate_locations
from .exhaustive import BudgetExceeded, ExhaustiveReport, enumerate_all, pareto_front_indices
from .mopso import (
    Particle,
    PsoConfig,
    RunTrace,
    SitingError,
    SitingReport,
    repair,
    run_mopso,
    step,
    to_placement,
)
