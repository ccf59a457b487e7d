"""Selfish load balancing on parallel machines.

Best-response dynamics to pure Nash equilibria under four machine cost
policies (makespan, SJF, LJF, FIFO), priority rules for choosing the next
mover, pairwise coalition (2-flip) dynamics, nashification, and an
experiment harness for convergence-rate measurements.
"""

from .coalitions import (
    CoalitionRunResult,
    FlipMove,
    improving_flips,
    run_coalitional,
    select_flip,
)
from .dynamics import (
    PriorityAlgorithm,
    RunResult,
    SelectionHistory,
    TraceEvent,
    improving_users,
    potential,
    run_to_ne,
    select_user,
    step,
)
from .errors import (
    BudgetError,
    CostOverflowError,
    DomainError,
    KpsimError,
    UnsupportedConfigError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentRow,
    GrowthClass,
    classify_growth,
    gen_weights,
    run_experiment,
)
from .model import (
    Instance,
    State,
    best_response,
    is_pure_ne,
    machine_load,
    user_cost,
)
from .nashification import NashifyResult, nashify
from .oracle import (
    ConfigurationGraph,
    build_graph,
    enumerate_states,
    longest_improvement_path,
    verify_ne_oracle,
)
from .rng import SplitMix64

__version__ = "0.1.0"
