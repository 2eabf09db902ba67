# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Core containers and dynamics.

This module has the hybrid dynamics model, trajectories, random streams,
result tables and the scenario file format.

"""
from .errors import (ResilError, ModelMismatchError, PolicyDomainError,
                     DomainError, IllConditionedError, TransitionDomainError,
                     NonConvergenceError, EmbeddingError, CapacityError,
                     StepSizeError, UnspecifiedDynamicsError, ValidationError,
                     ExperimentError)

from .resultset import ResultSet

from .dynamics import (HybridState, DynamicsModel, Trajectory,
                       DisturbanceProcess, simulate_step, rollout,
                       ConstantPolicy, SequencePolicy, LinearFeedback,
                       TabularPolicy)

from .models import build_model

from .scenario import ScenarioFile, KINDS
