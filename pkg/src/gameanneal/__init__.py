"""Distributed stochastic annealing for cooperative aggregative games.

A simulation library and CLI for seeking social optima of non-convex
aggregative games over random time-varying communication graphs, with a
deterministic gradient-tracking baseline, a centralized annealing recursion,
and the diagnostics to verify consensus and concentration behavior.
"""

from .config import ExperimentConfig, GameSpec, NetworkSpec
from .engine import (
    DivergenceError,
    SwarmState,
    centralized_anneal_step,
    daa_step,
    daag_step,
    run,
)
from .games import (
    GameInstance,
    SocialCostFn,
    agent_update_gradient,
    check_dissimilarity_bound,
    check_gradients,
    double_well,
    double_well_game,
    double_well_grad,
    ev_charging_game,
    eval_cost,
    eval_grad,
    make_game,
    quadratic_two_agent_game,
    social_update_gradient,
)
from .metrics import ConsensusSeries, EnsembleStats, compare_costs, consensus_error, ensemble_run, social_cost_series
from .noise import GradientNoise, NoiseModel
from .oracle import (
    OracleResult,
    gibbs_density_1d,
    grid_search_social_optimum,
    multistart_descent,
    quadratic_nash,
)
from .schedules import ScheduleSet, schedule_eval
from .topology import (
    GraphSample,
    NetworkModel,
    check_connected_in_expectation,
    complete_network,
    erdos_renyi_pool,
    lambda2,
    laplacian,
    sample_graph,
)

__version__ = "0.1.0"
