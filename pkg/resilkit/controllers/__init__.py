# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Resilience controllers.

Fallback switching for linear-quadratic dynamics, moving target defense
distribution updates and receding-horizon planning.

"""
from .fallback import (LQFallbackSpec, lq_fold, fallback_decision,
                       scalar_switch_threshold, lq_fallback_bruteforce,
                       SwitchThreshold)

from .mtd import (MTDState, mtd_update, mtd_objective, mtd_plan_horizon,
                  kl_divergence)

from .mpc import (QuadraticCost, ShortfallCost, plan,
                  receding_horizon_control, closed_loop)
