# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Containers for finite discounted stochastic games.

Throughout the games package the defender is the row player and
maximizes the stage payoff u_D; the attacker is the column player and
receives -u_D.  The defender's expected loss at a state is therefore -V.

"""

from collections import OrderedDict

import numpy as np

from ..core.errors import DomainError
from ..core.resultset import ResultSet


def _fmt_strategy(p):
    return " ".join("{:.12g}".format(v) for v in p)


class StochasticGame(object):
    """Zero-sum discounted stochastic game.

    Args:
        states (list): State labels.
        defender_actions (list): Per state, the defender action labels.
        attacker_actions (list): Per state, the attacker action labels.
        payoff (list): Per state, an array (n_def, n_att) of u_D.
        kernel (list): Per state, an array (n_def, n_att, n_states) of
            next-state probabilities.
        beta (float): Discount factor in (0, 1).
        meta (dict, optional): Construction parameters for reports.

    """

    def __init__(self, states, defender_actions, attacker_actions, payoff,
                 kernel, beta, meta=None):
        self.states = [str(s) for s in states]
        self.defender_actions = [list(a) for a in defender_actions]
        self.attacker_actions = [list(a) for a in attacker_actions]
        self.payoff = [np.asarray(p, dtype=np.float64) for p in payoff]
        self.kernel = [np.asarray(k, dtype=np.float64) for k in kernel]
        self.beta = float(beta)
        self.meta = OrderedDict() if meta is None else OrderedDict(meta)
        errs = self.problems()
        if len(errs) > 0:
            raise DomainError("; ".join(errs))
        self._index = {s: i for i, s in enumerate(self.states)}

    def problems(self):
        """List of invariant violations (empty when valid)."""
        errs = list()
        n = len(self.states)
        if n == 0:
            errs.append("game has no states")
        if len(set(self.states)) != n:
            errs.append("state labels are not unique")
        if not (0.0 < self.beta < 1.0):
            errs.append("beta must lie strictly inside (0, 1), got {}".format(
                self.beta))
        for name, seq in (("defender actions", self.defender_actions),
                          ("attacker actions", self.attacker_actions),
                          ("payoff", self.payoff), ("kernel", self.kernel)):
            if len(seq) != n:
                errs.append("{} given for {} states, expected {}".format(
                    name, len(seq), n))
        if len(errs) > 0:
            return errs
        for i, s in enumerate(self.states):
            nd = len(self.defender_actions[i])
            na = len(self.attacker_actions[i])
            if nd == 0 or na == 0:
                errs.append("state {} has an empty action set".format(s))
                continue
            if self.payoff[i].shape != (nd, na):
                errs.append("payoff of state {} has shape {}, expected "
                            "{}".format(s, self.payoff[i].shape, (nd, na)))
            elif not np.all(np.isfinite(self.payoff[i])):
                errs.append("payoff of state {} is not finite".format(s))
            if self.kernel[i].shape != (nd, na, n):
                errs.append("kernel of state {} has shape {}, expected "
                            "{}".format(s, self.kernel[i].shape, (nd, na, n)))
                continue
            if np.any(self.kernel[i] < 0):
                errs.append("kernel of state {} has negative entries".format(s))
            dev = np.max(np.abs(self.kernel[i].sum(axis=2) - 1.0))
            if dev > 1e-12:
                errs.append("kernel rows of state {} deviate from 1 by "
                            "{:.3g}".format(s, dev))
        return errs

    @property
    def n_states(self):
        return len(self.states)

    def index(self, state):
        return self._index[str(state)]

    def stage_matrix(self, i, V):
        """u_D(s,.,.) + beta sum_s' P(s'|s,.,.) V(s')."""
        return self.payoff[i] + self.beta * self.kernel[i].dot(V)

    def shifted(self, kappa):
        """Copy with kappa added to every stage payoff."""
        return StochasticGame(self.states, self.defender_actions,
                              self.attacker_actions,
                              [p + kappa for p in self.payoff], self.kernel,
                              self.beta, meta=self.meta)

    def to_dict(self):
        return OrderedDict(
            states=list(self.states),
            defender_actions=self.defender_actions,
            attacker_actions=self.attacker_actions,
            payoff=[p.tolist() for p in self.payoff],
            kernel=[k.tolist() for k in self.kernel],
            beta=self.beta)

    @classmethod
    def from_dict(cls, data):
        """Build from the dictionary layout written by :meth:`to_dict`.

        The kernel may also be given sparsely, per state, as a list over
        defender actions of lists over attacker actions of
        ``{next_state: probability}`` dicts.

        """
        states = [str(s) for s in data["states"]]
        index = {s: i for i, s in enumerate(states)}
        kernel = list()
        for i, ks in enumerate(data["kernel"]):
            if len(ks) > 0 and len(ks[0]) > 0 and isinstance(ks[0][0], dict):
                arr = np.zeros((len(ks), len(ks[0]), len(states)))
                for r, row in enumerate(ks):
                    for e, cell in enumerate(row):
                        for s, p in cell.items():
                            if str(s) not in index:
                                raise DomainError(
                                    "kernel of state {} names unknown state "
                                    "{!r}".format(states[i], s))
                            arr[r, e, index[str(s)]] += p
                kernel.append(arr)
            else:
                kernel.append(np.asarray(ks, dtype=np.float64))
        return cls(states, data["defender_actions"], data["attacker_actions"],
                   data["payoff"], kernel, data["beta"],
                   meta=data.get("meta"))

    def __repr__(self):
        return "StochasticGame<{} states, beta={}>".format(
            self.n_states, self.beta)


class EquilibriumSolution(object):
    """Value and stationary mixed strategies of a zero-sum game.

    Attributes:
        values (array): V(s) per state (defender payoff).
        defender (list): Per state, the defender mixed strategy.
        attacker (list): Per state, the attacker mixed strategy.
        iterations (int): Value-iteration sweeps performed.
        residual (float): Final sup-norm change.
        history (list): Sup-norm change at every sweep.

    """

    def __init__(self, game, values, defender, attacker, iterations=0,
                 residual=0.0, history=None):
        self.game = game
        self.values = np.asarray(values, dtype=np.float64)
        self.defender = [np.asarray(p, dtype=np.float64) for p in defender]
        self.attacker = [np.asarray(p, dtype=np.float64) for p in attacker]
        self.iterations = int(iterations)
        self.residual = float(residual)
        self.history = list() if history is None else list(history)

    @property
    def defender_loss(self):
        return -self.values

    def to_resultset(self):
        rs = ResultSet(["state", "value", "defender_loss", "defender_strategy",
                        "attacker_strategy"])
        for i, s in enumerate(self.game.states):
            rs.rows.append((s, float(self.values[i]), float(-self.values[i]),
                            _fmt_strategy(self.defender[i]),
                            _fmt_strategy(self.attacker[i])))
        return rs

    def __repr__(self):
        return "EquilibriumSolution<{} states, {} iterations, residual " \
            "{:.3g}>".format(len(self.values), self.iterations, self.residual)


class MDP(object):
    """Finite discounted MDP for a single maximizing agent.

    Args:
        states (list): State labels.
        actions (list): Per state, action labels.
        reward (list): Per state, an array (n_actions,) of rewards.
        kernel (list): Per state, an array (n_actions, n_states).
        beta (float): Discount factor in (0, 1).

    """

    def __init__(self, states, actions, reward, kernel, beta):
        self.states = [str(s) for s in states]
        self.actions = [list(a) for a in actions]
        self.reward = [np.asarray(r, dtype=np.float64).reshape(-1)
                       for r in reward]
        self.kernel = [np.atleast_2d(np.asarray(k, dtype=np.float64))
                       for k in kernel]
        self.beta = float(beta)
        if not (0.0 < self.beta < 1.0):
            raise DomainError("beta must lie strictly inside (0, 1)")
        n = len(self.states)
        for i in range(n):
            na = len(self.actions[i])
            if na == 0:
                raise DomainError("state {} has no actions".format(
                    self.states[i]))
            if self.reward[i].shape != (na,) or \
                    self.kernel[i].shape != (na, n):
                raise DomainError("reward/kernel shapes of state {} do not "
                                  "match its {} actions".format(
                                      self.states[i], na))
            if np.max(np.abs(self.kernel[i].sum(axis=1) - 1.0)) > 1e-12:
                raise DomainError("kernel rows of state {} do not sum to "
                                  "1".format(self.states[i]))

    @property
    def n_states(self):
        return len(self.states)
