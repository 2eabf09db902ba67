# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Single-agent reductions and tabular Q-learning.
"""

import logging
from collections import OrderedDict

import numpy as np

from ..core.errors import DomainError, StepSizeError
from ..core import streams
from .core import MDP
from .shapley import _policy_table, _first_min

logger = logging.getLogger(__name__)


def induced_mdp(game, pi_A):
    """Defender MDP obtained by fixing the attacker's stationary policy."""
    pa = _policy_table(game, pi_A, "attacker")
    reward, kernel = list(), list()
    for i in range(game.n_states):
        reward.append(game.payoff[i].dot(pa[i]))
        kernel.append(np.einsum("e,res->rs", pa[i], game.kernel[i]))
    return MDP(game.states, game.defender_actions, reward, kernel, game.beta)


def value_iteration(mdp, tol=1e-10, max_iter=100000):
    """Optimal values and greedy policy of a finite MDP.

    Returns:
        (dict): ``values``, ``policy`` (action index per state, lowest index
            on ties) and ``iterations``.

    """
    n = mdp.n_states
    V = np.zeros(n)
    it = 0
    while it < max_iter:
        Vn = np.array([np.max(mdp.reward[i] + mdp.beta * mdp.kernel[i].dot(V))
                       for i in range(n)])
        resid = np.max(np.abs(Vn - V))
        V = Vn
        it += 1
        if resid < tol:
            break
    policy = [_first_min(-(mdp.reward[i] + mdp.beta * mdp.kernel[i].dot(V)))
              for i in range(n)]
    return OrderedDict(values=V, policy=policy, iterations=it)


class StepSchedule(object):
    """Learning-rate schedule indexed by the visit count n >= 1.

    Args:
        kind (str): "polynomial" (alpha0 / n**omega), "harmonic"
            (alpha0 / n) or "constant" (alpha0).
        alpha0 (float): Initial rate in (0, 1].
        omega (float): Polynomial exponent in (0.5, 1].

    """

    kinds = ("polynomial", "harmonic", "constant")

    def __init__(self, kind="polynomial", alpha0=1.0, omega=0.6):
        if kind not in self.kinds:
            raise StepSizeError("unknown step schedule {!r}".format(kind))
        if not (0.0 < alpha0 <= 1.0):
            raise StepSizeError("alpha0 must lie in (0, 1], got {}".format(
                alpha0))
        if kind == "polynomial" and not (0.5 < omega <= 1.0):
            raise StepSizeError("omega must lie in (0.5, 1], got {}".format(
                omega))
        self.kind = kind
        self.alpha0 = float(alpha0)
        self.omega = float(omega)

    def __call__(self, n):
        if self.kind == "constant":
            return self.alpha0
        if self.kind == "harmonic":
            return self.alpha0 / n
        return self.alpha0 / n ** self.omega


def q_learning(mdp, episodes=200, steps=50, schedule=None, epsilon=0.2,
               seed=0, q0=0.0, start=None):
    """Tabular Q-learning with epsilon-greedy exploration.

    Each (state, action) pair keeps its own visit count n and is updated
    with rate alpha(n):

        Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + beta max_a' Q(s',a'))

    Episode k draws from the counter-based stream ``("qlearning", k)`` so
    a run is fixed by its seed.

    Args:
        mdp (MDP): The environment (rewards are maximized).
        episodes (int): Number of episodes.
        steps (int): Steps per episode.
        schedule (StepSchedule, optional): Learning rates.
        epsilon (float): Exploration probability in [0, 1].
        seed (int): Master seed.
        q0 (float): Initial table value.
        start (str, optional): Start state label; default uniform.

    Returns:
        (dict): ``Q`` (list of per-state arrays), ``policy`` (greedy action
            index per state), ``actions`` (greedy labels) and ``visits``.

    """
    if schedule is None:
        schedule = StepSchedule()
    if not (0.0 <= epsilon <= 1.0):
        raise DomainError("epsilon must lie in [0, 1]")
    n = mdp.n_states
    Q = [np.full(len(a), float(q0)) for a in mdp.actions]
    visits = [np.zeros(len(a), dtype=np.int64) for a in mdp.actions]
    s0 = None if start is None else mdp.states.index(str(start))
    for ep in range(episodes):
        rng = streams.generator(seed, "qlearning", ep)
        s = int(rng.integers(n)) if s0 is None else s0
        for _ in range(steps):
            if rng.random() < epsilon:
                a = int(rng.integers(len(Q[s])))
            else:
                a = _first_min(-Q[s])
            sn = int(rng.choice(n, p=mdp.kernel[s][a]))
            visits[s][a] += 1
            alpha = schedule(visits[s][a])
            target = mdp.reward[s][a] + mdp.beta * np.max(Q[sn])
            Q[s][a] = (1.0 - alpha) * Q[s][a] + alpha * target
            s = sn
        if (ep + 1) % 100 == 0:
            logger.debug("q-learning: {} episodes done".format(ep + 1))
    policy = [_first_min(-q) for q in Q]
    return OrderedDict(Q=Q, policy=policy,
                       actions=[mdp.actions[i][policy[i]] for i in range(n)],
                       visits=visits)
