# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Value iteration and policy evaluation for zero-sum stochastic games.
"""

import logging
from collections import OrderedDict

import numpy as np

from ..core.errors import DomainError, NonConvergenceError
from .core import EquilibriumSolution
from .matrix import solve_matrix_game

logger = logging.getLogger(__name__)


def _first_min(v, rtol=1e-12):
    """Lowest index whose value is within rounding of the minimum."""
    m = np.min(v)
    return int(np.nonzero(v <= m + rtol * (1.0 + abs(m)))[0][0])


def _strategy(game, i, p, n, who):
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if len(p) != n or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("{} policy at state {} is not a distribution over "
                          "its {} actions".format(who, game.states[i], n))
    return p


def _policy_table(game, policy, who):
    """Normalize a policy given as a list or a dict keyed by state label."""
    if policy is None:
        raise DomainError("{} policy is missing".format(who))
    out = list()
    for i, s in enumerate(game.states):
        if isinstance(policy, dict):
            if s not in policy:
                raise DomainError("{} policy undefined at state {}".format(
                    who, s))
            p = policy[s]
        else:
            if i >= len(policy):
                raise DomainError("{} policy undefined at state {}".format(
                    who, s))
            p = policy[i]
        acts = game.defender_actions[i] if who == "defender" \
            else game.attacker_actions[i]
        if isinstance(p, str):
            if p not in acts:
                raise DomainError("unknown {} action {!r} at state {}".format(
                    who, p, s))
            q = np.zeros(len(acts))
            q[acts.index(p)] = 1.0
            p = q
        out.append(_strategy(game, i, p, len(acts), who))
    return out


def shapley_value_iteration(game, tol=1e-9, max_iter=10000, V0=None):
    """Solve a zero-sum stochastic game by Shapley's value iteration.

    Each sweep replaces V(s) by the value of the stage matrix game
    u_D(s,.,.) + beta P(.|s,.,.)V and stops once the sup-norm change drops
    below ``tol``.  Stage strategies are extracted at the final iterate.

    Args:
        game (StochasticGame): The game.
        tol (float): Sup-norm stopping tolerance.
        max_iter (int): Sweep limit.
        V0 (array, optional): Initial values, default zero.

    Returns:
        (EquilibriumSolution): The solution.

    Raises:
        NonConvergenceError: If ``max_iter`` sweeps do not reach ``tol``.
            The partial solution is attached as ``.result``.

    """
    n = game.n_states
    V = np.zeros(n) if V0 is None else np.array(V0, dtype=np.float64)
    history = list()
    resid = np.inf
    it = 0
    while it < max_iter:
        Vn = np.array([solve_matrix_game(game.stage_matrix(i, V)).value
                       for i in range(n)])
        resid = float(np.max(np.abs(Vn - V)))
        history.append(resid)
        V = Vn
        it += 1
        logger.debug("shapley iteration {}: residual {:.3e}".format(it, resid))
        if resid < tol:
            break
    defender, attacker = list(), list()
    for i in range(n):
        sol = solve_matrix_game(game.stage_matrix(i, V))
        defender.append(sol.row)
        attacker.append(sol.col)
    result = EquilibriumSolution(game, V, defender, attacker, iterations=it,
                                 residual=resid, history=history)
    if resid >= tol:
        raise NonConvergenceError(
            "value iteration stopped after {} sweeps with residual "
            "{:.3e}".format(it, resid), result=result, residual=resid)
    logger.info("shapley: converged in {} sweeps".format(it))
    return result


def _induced(game, pi_D, pi_A):
    n = game.n_states
    P = np.zeros((n, n))
    u = np.zeros(n)
    for i in range(n):
        u[i] = pi_D[i].dot(game.payoff[i]).dot(pi_A[i])
        P[i] = np.einsum("r,e,res->s", pi_D[i], pi_A[i], game.kernel[i])
    return P, u


def policy_evaluation(game, pi_D, pi_A):
    """Defender value of a stationary policy pair.

    Solves (I - beta P_pi) V = u_pi.

    Args:
        game (StochasticGame): The game.
        pi_D, pi_A: Per state mixed strategies (lists, or dicts keyed by
            state label; an action label stands for a pure strategy).

    Returns:
        (array): V per state.

    """
    pd = _policy_table(game, pi_D, "defender")
    pa = _policy_table(game, pi_A, "attacker")
    P, u = _induced(game, pd, pa)
    return np.linalg.solve(np.eye(game.n_states) - game.beta * P, u)


def worst_case_attacker(game, pi_D, tol=1e-10, max_iter=10000):
    """Best attacker response to a fixed defender policy.

    Fixing pi_D leaves the attacker a single-agent MDP with reward -u_D.
    It is solved by value iteration followed by policy iteration, which
    makes the returned values exact for the greedy pure policy.  Ties go
    to the lowest action index.

    Args:
        game (StochasticGame): The game.
        pi_D: Defender stationary policy.
        tol (float): Value-iteration tolerance.
        max_iter (int): Sweep limit.

    Returns:
        (dict): ``policy`` (pure attacker strategy per state, as
            distributions), ``actions`` (chosen labels), ``values``
            (defender value V) and ``loss`` (defender expected loss -V).

    """
    pd = _policy_table(game, pi_D, "defender")
    n = game.n_states
    # Per state: defender payoff row and kernel per attacker action.
    rew = [pd[i].dot(game.payoff[i]) for i in range(n)]
    ker = [np.einsum("r,res->es", pd[i], game.kernel[i]) for i in range(n)]

    V = np.zeros(n)
    it = 0
    resid = np.inf
    while it < max_iter and resid >= tol:
        Vn = np.array([np.min(rew[i] + game.beta * ker[i].dot(V))
                       for i in range(n)])
        resid = float(np.max(np.abs(Vn - V)))
        V = Vn
        it += 1
    if resid >= tol:
        raise NonConvergenceError(
            "attacker value iteration stopped after {} sweeps with residual "
            "{:.3e}".format(it, resid), result=V, residual=resid)

    choice = [_first_min(rew[i] + game.beta * ker[i].dot(V)) for i in range(n)]
    for _ in range(max_iter):
        P = np.array([ker[i][choice[i]] for i in range(n)])
        u = np.array([rew[i][choice[i]] for i in range(n)])
        V = np.linalg.solve(np.eye(n) - game.beta * P, u)
        new = list()
        for i in range(n):
            z = rew[i] + game.beta * ker[i].dot(V)
            j = _first_min(z)
            # Keep the incumbent unless strictly improved.
            if z[j] < z[choice[i]] - 1e-12 * (1.0 + abs(z[j])):
                new.append(j)
            else:
                new.append(choice[i])
        if new == choice:
            break
        choice = new

    policy = list()
    for i in range(n):
        p = np.zeros(len(game.attacker_actions[i]))
        p[choice[i]] = 1.0
        policy.append(p)
    logger.debug("worst-case attacker: {}".format(choice))
    return OrderedDict(
        policy=policy,
        actions=[game.attacker_actions[i][choice[i]] for i in range(n)],
        values=V, loss=-V)


def deviation_gains(solution):
    """Largest one-shot improvement available to either player.

    At every state the stage matrix is built from the solution values and
    each player's stage strategy is replaced by its best pure reply while
    the other keeps theirs.

    Returns:
        (dict): ``defender`` and ``attacker`` maximal gains (nonpositive up
            to rounding at an equilibrium) and per-state arrays.

    """
    game = solution.game
    gd = np.zeros(game.n_states)
    ga = np.zeros(game.n_states)
    for i in range(game.n_states):
        Z = game.stage_matrix(i, solution.values)
        v = solution.defender[i].dot(Z).dot(solution.attacker[i])
        gd[i] = np.max(Z.dot(solution.attacker[i])) - v
        ga[i] = v - np.min(solution.defender[i].dot(Z))
    return OrderedDict(defender=float(gd.max()), attacker=float(ga.max()),
                       defender_by_state=gd, attacker_by_state=ga)
