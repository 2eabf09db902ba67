# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Zero-sum attacker-defender stochastic games.
"""
from .core import StochasticGame, EquilibriumSolution, MDP

from .matrix import solve_matrix_game, saddle_gap

from .shapley import (shapley_value_iteration, policy_evaluation,
                      worst_case_attacker, deviation_gains)

from .slice_migration import build_slice_migration_game

from .learning import induced_mdp, value_iteration, StepSchedule, q_learning
