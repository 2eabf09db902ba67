# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Slice migration attacker-defender game.

A network slice is hosted on one of J nodes and carries a queue that is
bucketed into levels 0..K-1.  The attacker may flood or probe a node, the
defender may keep the slice in place, migrate it or scale up service on
its current host.  The queue follows

    x' = clip(x + lam0 + lam_q [flood hits] - mu_eff, 0, K-1)

where a flood hits when it targets the hosting node and the defender does
not migrate away this step.  Migration costs one step of service
(``migration_penalty``) and scale_up adds ``scale_gain`` to the service
rate.  Fractional next levels are split between the two neighbouring
buckets in proportion to the remainder.

"""

import logging
from collections import OrderedDict

import numpy as np

from ..core.errors import DomainError, UnspecifiedDynamicsError
from .core import StochasticGame

logger = logging.getLogger(__name__)

#: Actions named in the threat model whose queue effect must be given as a
#: bucket transition table.
TABLE_ATTACKER_ACTIONS = ("jam", "multi")
TABLE_DEFENDER_ACTIONS = ("balance", "scale_down")

#: Default defender action costs.
DEFAULT_DEFENDER_COST = OrderedDict(stay=0.0, migrate=0.5, scale_up=0.3)


def state_label(bucket, node):
    return "x{}@n{}".format(bucket, node)


def _split(level, K):
    """Distribution over buckets for a real queue level."""
    level = min(max(level, 0.0), K - 1.0)
    lo = int(np.floor(level))
    frac = level - lo
    p = np.zeros(K)
    if frac < 1e-12 or lo == K - 1:
        p[lo] = 1.0
    else:
        p[lo] = 1.0 - frac
        p[lo + 1] = frac
    return p


def _bucket_table(name, table, K):
    T = np.asarray(table, dtype=np.float64)
    if T.shape != (K, K):
        raise DomainError("transition table for {!r} has shape {}, expected "
                          "{}".format(name, T.shape, (K, K)))
    if np.any(T < 0) or np.max(np.abs(T.sum(axis=1) - 1.0)) > 1e-12:
        raise DomainError("transition table for {!r} is not stochastic".format(
            name))
    return T


def build_slice_migration_game(J=3, K=5, lam0=1.0, lam_q=2.0, mu=1.0,
                               migration_penalty=1.0, scale_gain=1.0,
                               holding_cost=1.0, hit_loss=1.0,
                               defender_cost=None, attacker_cost=None,
                               attacker_weight=1.0, shock_prob=0.0,
                               beta=0.9, extra_actions=None, tables=None):
    """Build the slice migration game.

    Args:
        J (int): Number of hosting nodes, >= 2.
        K (int): Number of queue buckets, >= 2.
        lam0 (float): Baseline arrivals per step.
        lam_q (float): Extra arrivals while flooded.
        mu (float): Service per step.
        migration_penalty (float): Service lost in a migration step.
        scale_gain (float): Service added by scale_up.
        holding_cost (float): Loss per queued bucket.
        hit_loss (float): Loss when a flood hits the host.
        defender_cost (dict): c_D per action family (stay, migrate,
            scale_up, plus any table actions).
        attacker_cost (dict): c_A per action family.  Only echoed, the
            zero-sum reduction does not use it.
        attacker_weight (float): Attacker utility weight.  Echoed only.
        shock_prob (float): Probability of one extra natural arrival.
        beta (float): Discount factor.
        extra_actions (dict, optional): ``{"attacker": [...], "defender":
            [...]}`` action families beyond the built-in ones.
        tables (dict, optional): K x K bucket transition table for every
            extra action family.

    Returns:
        (StochasticGame): States ``x{bucket}@n{node}``, row player the
            defender.

    """
    if int(J) != J or J < 2 or int(K) != K or K < 2:
        raise DomainError("slice migration needs J >= 2 and K >= 2")
    J, K = int(J), int(K)
    for name, v in (("lam0", lam0), ("lam_q", lam_q), ("mu", mu),
                    ("migration_penalty", migration_penalty),
                    ("scale_gain", scale_gain), ("holding_cost", holding_cost),
                    ("hit_loss", hit_loss), ("attacker_weight",
                                             attacker_weight)):
        if v < 0:
            raise DomainError("{} must be nonnegative, got {}".format(name, v))
    if not (0.0 <= shock_prob <= 1.0):
        raise DomainError("shock_prob must lie in [0, 1]")
    c_D = OrderedDict(DEFAULT_DEFENDER_COST)
    if defender_cost is not None:
        c_D.update(defender_cost)
    c_A = OrderedDict() if attacker_cost is None else OrderedDict(
        attacker_cost)
    for name, v in list(c_D.items()) + list(c_A.items()):
        if v < 0:
            raise DomainError("action cost {} must be nonnegative".format(name))

    extra = dict(attacker=[], defender=[])
    if extra_actions is not None:
        for who in ("attacker", "defender"):
            extra[who] = list(extra_actions.get(who, []))
    tables = dict() if tables is None else dict(tables)
    tab = dict()
    for who in ("attacker", "defender"):
        for name in extra[who]:
            if name not in tables:
                raise UnspecifiedDynamicsError(
                    "{} action {!r} has unspecified dynamics; supply a "
                    "bucket transition table".format(who, name))
            tab[name] = _bucket_table(name, tables[name], K)

    states = [state_label(b, j) for j in range(J) for b in range(K)]
    index = {s: i for i, s in enumerate(states)}
    att = ["idle"] + ["flood:{}".format(j) for j in range(J)] + \
        ["probe:{}".format(j) for j in range(J)] + extra["attacker"]

    def_actions, payoff, kernel = list(), list(), list()
    for j in range(J):
        for b in range(K):
            acts = ["stay"] + ["migrate:{}".format(k) for k in range(J)
                               if k != j] + ["scale_up:{}".format(j)] + \
                extra["defender"]
            U = np.zeros((len(acts), len(att)))
            P = np.zeros((len(acts), len(att), len(states)))
            for r, ra in enumerate(acts):
                fam, _, arg = ra.partition(":")
                host = int(arg) if fam == "migrate" else j
                service = mu
                if fam == "migrate":
                    service -= migration_penalty
                elif fam == "scale_up":
                    service += scale_gain
                for e, ea in enumerate(att):
                    efam, _, earg = ea.partition(":")
                    hit = efam == "flood" and int(earg) == j and \
                        fam != "migrate"
                    level = b + lam0 + (lam_q if hit else 0.0) - service
                    dist = (1.0 - shock_prob) * _split(level, K) + \
                        shock_prob * _split(level + 1.0, K)
                    if efam in tab:
                        dist = dist.dot(tab[efam])
                    if fam in tab:
                        dist = dist.dot(tab[fam])
                    for bn in range(K):
                        if dist[bn] > 0:
                            P[r, e, index[state_label(bn, host)]] += dist[bn]
                    loss = holding_cost * b + (hit_loss if hit else 0.0)
                    U[r, e] = -loss - float(c_D.get(fam, 0.0))
            def_actions.append(acts)
            payoff.append(U)
            kernel.append(P)
    meta = OrderedDict(J=J, K=K, lam0=lam0, lam_q=lam_q, mu=mu,
                       migration_penalty=migration_penalty,
                       scale_gain=scale_gain, holding_cost=holding_cost,
                       hit_loss=hit_loss, defender_cost=dict(c_D),
                       attacker_cost=dict(c_A),
                       attacker_weight=attacker_weight,
                       shock_prob=shock_prob)
    logger.debug("slice migration game: {} states, {} attacker actions".format(
        len(states), len(att)))
    return StochasticGame(states, def_actions, [list(att)] * len(states),
                          payoff, kernel, beta, meta=meta)
