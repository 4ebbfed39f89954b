"""Equilibria and inefficiency of congestion games routed by competing controllers."""

from netctl.analytics import (
    PoaQuery,
    empirical_poa,
    pigou_nce_flow,
    pigou_nce_social_cost,
    pigou_so_social_cost,
    poa_closed_form,
    poa_limit,
    social_cost_surface,
    worst_case_threshold,
)
from netctl.control_game import best_response, controller_cost, solve_nce, verify_potential_descent
from netctl.costs import CostPolynomial, PowerCost
from netctl.equilibrium import (
    FlowProfile,
    beckmann_potential,
    edge_cost,
    social_cost,
    solve_so,
    solve_ue,
)
from netctl.gamefile import load_game, parse_game
from netctl.game_model import (
    ControlAssignment,
    Edge,
    GameInstance,
    InformationType,
    Network,
    Population,
    enumerate_paths,
    is_proportional,
    share_of_control,
    validate,
)
from netctl.instances import braess, pigou, pigou_two_types
from netctl.learning import LearnerConfig, learning_curve, run_episode
from netctl.os_choice import OsShareProfile, os_best_response_step, passenger_cost, solve_os_game

__version__ = "0.1.0"
