# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Receding-horizon control over a finite action set.

Every action sequence of length H is scored against the same sampled
disturbance paths (common random numbers), using either the sample mean
or the CVaR of the accumulated cost.  Only the first action of the best
sequence is applied; :func:`closed_loop` re-plans at every step.

"""

import itertools
import logging
from collections import OrderedDict

import numpy as np

from ..core.errors import DomainError
from ..core.dynamics import (DisturbanceProcess, Trajectory, SequencePolicy,
                             simulate_step, as_policy, _act)
from ..core.stats import cvar
from ..core import streams

logger = logging.getLogger(__name__)


class QuadraticCost(object):
    """Stage cost l(x, u, q) = (x - target)'Qx(x - target) + ru |u|^2 + mode cost.

    Args:
        qx (float or array): State weight (scalar or matrix).
        ru (float): Input weight.
        target (array, optional): State set point.
        mode_cost (dict, optional): Extra cost per mode label.

    """

    def __init__(self, qx=1.0, ru=0.0, target=None, mode_cost=None):
        self.qx = np.asarray(qx, dtype=np.float64)
        self.ru = float(ru)
        self.target = target
        self.mode_cost = dict() if mode_cost is None else dict(mode_cost)

    def state_cost(self, x, q):
        d = np.asarray(x, dtype=np.float64)
        if self.target is not None:
            d = d - np.asarray(self.target, dtype=np.float64)
        if self.qx.ndim < 2:
            val = float(np.sum(self.qx * d * d))
        else:
            val = float(d.dot(self.qx).dot(d))
        return val + self.mode_cost.get(q, 0.0)

    def control_cost(self, u, q):
        u = np.asarray(u, dtype=np.float64)
        return self.ru * float(np.sum(u * u))

    def __call__(self, x, u, q):
        return self.state_cost(x, q) + self.control_cost(u, q)


class ShortfallCost(object):
    """Stage cost weight*(1 - Q/Q_max) measured through a model."""

    def __init__(self, model, weight=1.0, action_cost=None):
        self.model = model
        self.weight = float(weight)
        self.action_cost = dict() if action_cost is None else action_cost

    def state_cost(self, x, q):
        return self.weight * (1.0 - self.model.measure(x, q) /
                              self.model.q_max)

    def control_cost(self, u, q):
        if isinstance(self.action_cost, dict):
            return float(self.action_cost.get(u, self.action_cost.get(
                str(u), 0.0)))
        return float(self.action_cost) * float(np.sum(np.abs(u)))

    def __call__(self, x, u, q):
        return self.state_cost(x, q) + self.control_cost(u, q)


def _predicted_attack(apol):
    # Past the end of a known attack path the last value is held.
    if isinstance(apol, SequencePolicy) and len(apol) > 0:
        last = apol.values[-1]

        def hold(state, t):
            return apol.values[t] if t < len(apol) else last
        return hold
    return apol


def sample_paths(disturbances, t0, H, n_samples, stream="mpc"):
    """Draw n_samples natural disturbance paths of length H from time t0.

    Sample n reads the counter-based stream ``stream/n`` so the sample set
    is fixed by the seed and shared by every candidate sequence.

    """
    if disturbances is None:
        disturbances = DisturbanceProcess()
    span = disturbances.horizon()["natural"]
    steps = [t0 + k for k in range(H)]
    if span is not None and span > 0:
        steps = [min(t, span - 1) for t in steps]
    paths = list()
    for n in range(n_samples):
        proc = disturbances.with_stream(streams.substream(stream, n))
        paths.append([proc.natural_at(t) for t in steps])
    return paths


def plan(model, state, actions, stage_cost, H, disturbances=None,
         n_samples=1, objective="expectation", alpha=0.0, control_cost=None,
         terminal_cost=None, attacker=None, t0=0, stream="mpc"):
    """Exhaustive search over action sequences.

    Args:
        model (DynamicsModel): Prediction model.
        state (HybridState): Current state.
        actions (list): Finite defender action set.
        stage_cost (callable): l(x, u, q).
        H (int): Prediction horizon.
        disturbances (DisturbanceProcess, optional): Natural disturbance
            sampler (and attack path) used for prediction.
        n_samples (int): Number of sampled disturbance paths.
        objective (str): "expectation" or "cvar".
        alpha (float): CVaR level.
        control_cost (callable, optional): c(u, q), added to stage cost.
        terminal_cost (callable, optional): V(x, q).
        attacker: Attacker policy used inside the prediction; defaults to
            the attack path of ``disturbances``.
        t0 (int): Current time index.

    Returns:
        (dict): ``action`` (u*), ``index``, ``sequence``, ``value`` and
            ``n_sequences``.  Ties go to the lexicographically smallest
            sequence of action indices.

    """
    actions = list(actions)
    if len(actions) == 0:
        raise DomainError("empty defender action set")
    if H < 1:
        raise DomainError("horizon must be >= 1, got {}".format(H))
    if n_samples < 1:
        raise DomainError("need at least one disturbance sample")
    if objective not in ("expectation", "cvar"):
        raise DomainError("unknown objective {!r}".format(objective))
    model.check_state(state)
    if disturbances is None:
        disturbances = DisturbanceProcess()
    apol = _predicted_attack(as_policy(
        disturbances.attack if attacker is None else attacker))
    paths = sample_paths(disturbances, t0, H, n_samples, stream=stream)

    best = None
    count = 0
    for seq in itertools.product(range(len(actions)), repeat=H):
        count += 1
        costs = np.zeros(n_samples)
        for n, path in enumerate(paths):
            s = state
            c = 0.0
            for k, ai in enumerate(seq):
                u = actions[ai]
                c += stage_cost(s.x, u, s.q)
                if control_cost is not None:
                    c += control_cost(u, s.q)
                w = _act(apol, s, t0 + k, "attacker")
                s = simulate_step(model, s, u, w, path[k])
            if terminal_cost is not None:
                c += terminal_cost(s.x, s.q)
            costs[n] = c
        if objective == "cvar":
            value = cvar(costs, alpha)
        else:
            value = float(np.mean(costs))
        if best is None or value < best[0]:
            best = (value, seq)
    value, seq = best
    logger.debug("mpc: {} sequences, best {} value {:.6g}".format(
        count, seq, value))
    return OrderedDict(action=actions[seq[0]], index=seq[0],
                       sequence=[actions[i] for i in seq], value=value,
                       n_sequences=count)


def receding_horizon_control(model, stage_cost, H, state, actions,
                             disturbances=None, n_samples=1,
                             objective="expectation", alpha=0.0,
                             control_cost=None, terminal_cost=None,
                             attacker=None, t0=0):
    """First action of the best H-step plan; see :func:`plan`."""
    return plan(model, state, actions, stage_cost, H,
                disturbances=disturbances, n_samples=n_samples,
                objective=objective, alpha=alpha, control_cost=control_cost,
                terminal_cost=terminal_cost, attacker=attacker,
                t0=t0)["action"]


def closed_loop(model, s0, T, actions, stage_cost, H, disturbances=None,
                n_samples=1, objective="expectation", alpha=0.0,
                control_cost=None, terminal_cost=None, prediction=None):
    """Run the receding-horizon controller against the true disturbances.

    The plant evolves with the actual draws of ``disturbances`` (stream
    as configured) while each plan uses independently sampled prediction
    paths.

    Args:
        prediction (DynamicsModel, optional): Model used for planning;
            defaults to the plant.

    Returns:
        (tuple): (Trajectory, list of per-step plan values).

    """
    if disturbances is None:
        disturbances = DisturbanceProcess()
    prediction = model if prediction is None else prediction
    apol = as_policy(disturbances.attack)
    s = s0
    xs, qs, Qs = [np.array(s0.x)], [s0.q], [model.measure(s0.x, s0.q)]
    us, ws, xis, values = list(), list(), list(), list()
    for t in range(T):
        res = plan(prediction, s, actions, stage_cost, H,
                   disturbances=disturbances, n_samples=n_samples,
                   objective=objective, alpha=alpha,
                   control_cost=control_cost, terminal_cost=terminal_cost,
                   t0=t, stream="mpc/{}".format(t))
        u = res["action"]
        w = _act(apol, s, t, "attacker")
        xi = disturbances.natural_at(t)
        s = simulate_step(model, s, u, w, xi)
        us.append(u)
        ws.append(w)
        xis.append(xi)
        values.append(res["value"])
        xs.append(np.array(s.x))
        qs.append(s.q)
        Qs.append(model.measure(s.x, s.q))
    us.append(None)
    ws.append(None)
    xis.append(None)
    traj = Trajectory(np.array(xs), qs, Qs, model.q_max, u=us, w=ws, xi=xis,
                      model=model.name)
    return traj, values
