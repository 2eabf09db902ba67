# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Hybrid network dynamics.

A network is described by a continuous state ``x`` (queue lengths,
capacities, ...) and a discrete disruption mode ``q``.  A
:class:`DynamicsModel` bundles the state update ``f``, the mode update
``phi`` and the measurement ``h`` that maps the hybrid state to a scalar
performance ``Q`` in ``[0, q_max]``.  :func:`rollout` drives a model with
defender and attacker policies plus natural disturbances and records a
:class:`Trajectory`.

"""

import numbers
import logging

import numpy as np

from .errors import ModelMismatchError, PolicyDomainError, DomainError
from .resultset import ResultSet
from . import streams

logger = logging.getLogger(__name__)


class HybridState(object):
    """A continuous state vector paired with a disruption mode label.

    Args:
        x (array_like): The continuous state.  Scalars are promoted to
            length-1 vectors.
        q (str): The disruption mode.

    """

    __slots__ = ("x", "q")

    def __init__(self, x, q="normal"):
        x = np.array(x, dtype=np.float64).reshape(-1)
        x.flags.writeable = False
        self.x = x
        self.q = str(q)

    @property
    def dim(self):
        return len(self.x)

    def __eq__(self, other):
        if not isinstance(other, HybridState):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.x, other.x)

    def __repr__(self):
        return "HybridState(x={}, q={!r})".format(self.x.tolist(), self.q)


class DynamicsModel(object):
    """Hybrid dynamics x' = f(x, u, w, xi, q), q' = phi(q, x, u, w, xi).

    Models are immutable once built: derived variants are produced with
    :meth:`with_mode_map`.

    Args:
        name (str): Model name used in reports.
        dim (int): Dimension of the continuous state.
        modes (list): The finite set of mode labels.
        f (callable): State update ``f(x, u, w, xi, q) -> x'``.
        phi (callable, optional): Mode update ``phi(q, x, u, w, xi) -> q'``.
            Default keeps the mode fixed.
        h (callable, optional): Measurement ``h(x, q) -> Q``.  Default is
            the first state component.
        q_max (float): Nominal maximum performance.
        lower (float or array, optional): Lower clip applied to x'.
        upper (float or array, optional): Upper clip applied to x'.
        params (dict, optional): Parameters echoed into run reports.

    """

    def __init__(self, name, dim, modes, f, phi=None, h=None, q_max=1.0,
                 lower=None, upper=None, params=None):
        if dim < 1:
            raise ModelMismatchError("model dimension must be >= 1")
        if q_max <= 0:
            raise DomainError("q_max must be positive, got {}".format(q_max))
        modes = [str(m) for m in modes]
        if len(modes) == 0 or len(set(modes)) != len(modes):
            raise ModelMismatchError(
                "mode set must be nonempty and unique: {}".format(modes))
        self.name = name
        self.dim = int(dim)
        self.modes = tuple(modes)
        self.q_max = float(q_max)
        self.lower = lower
        self.upper = upper
        self.params = dict() if params is None else dict(params)
        self._f = f
        self._phi = phi
        self._h = h

    def __repr__(self):
        return "DynamicsModel<{}, dim={}, modes={}, q_max={}>".format(
            self.name, self.dim, list(self.modes), self.q_max)

    def with_mode_map(self, phi, name=None):
        """Return a copy of this model with a different mode update."""
        return DynamicsModel(
            self.name if name is None else name, self.dim, self.modes,
            self._f, phi=phi, h=self._h, q_max=self.q_max, lower=self.lower,
            upper=self.upper, params=self.params)

    def check_state(self, s):
        """Raise ModelMismatchError if s is not a valid state of this model.
        """
        if not isinstance(s, HybridState):
            raise ModelMismatchError("expected a HybridState, got {!r}".format(s))
        if s.dim != self.dim:
            raise ModelMismatchError(
                "state has dimension {} but model {} has dimension {}".format(
                    s.dim, self.name, self.dim))
        if s.q not in self.modes:
            raise ModelMismatchError(
                "mode {!r} not in mode set {} of model {}".format(
                    s.q, list(self.modes), self.name))

    def measure(self, x, q):
        """Performance Q = h(x, q), clipped to [0, q_max]."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if self._h is None:
            val = x[0]
        else:
            val = self._h(x, q)
        return float(np.clip(val, 0.0, self.q_max))

    def next_state(self, x, u, w, xi, q):
        xn = np.asarray(self._f(x, u, w, xi, q), dtype=np.float64).reshape(-1)
        if len(xn) != self.dim:
            raise ModelMismatchError(
                "state map of {} returned dimension {}, expected {}".format(
                    self.name, len(xn), self.dim))
        if self.lower is not None or self.upper is not None:
            xn = np.clip(xn, self.lower, self.upper)
        return xn

    def next_mode(self, q, x, u, w, xi):
        if self._phi is None:
            return q
        qn = str(self._phi(q, x, u, w, xi))
        if qn not in self.modes:
            raise ModelMismatchError(
                "mode map of {} returned {!r}, not in {}".format(
                    self.name, qn, list(self.modes)))
        return qn


def simulate_step(model, s, u=0.0, w=0.0, xi=0.0):
    """Advance a hybrid state by one step.

    Args:
        model (DynamicsModel): The dynamics.
        s (HybridState): The current state.
        u: Defender action.
        w: Attacker action.
        xi: Natural disturbance.

    Returns:
        (HybridState): The state (f(x,u,w,xi,q), phi(q,x,u,w,xi)).

    """
    model.check_state(s)
    xn = model.next_state(s.x, u, w, xi, s.q)
    qn = model.next_mode(s.q, s.x, u, w, xi)
    return HybridState(xn, qn)


class ConstantPolicy(object):
    """Return the same action on every state."""

    def __init__(self, value):
        self.value = value

    def __call__(self, state, t):
        return self.value


class SequencePolicy(object):
    """Replay a fixed action path indexed by time."""

    def __init__(self, values):
        self.values = list(values)

    def __len__(self):
        return len(self.values)

    def __call__(self, state, t):
        if t >= len(self.values):
            raise PolicyDomainError(
                "action path of length {} has no entry for t={}".format(
                    len(self.values), t))
        return self.values[t]


class LinearFeedback(object):
    """State feedback u = -K x, optionally clipped to [low, high]."""

    def __init__(self, gain, low=None, high=None):
        self.gain = np.atleast_2d(np.asarray(gain, dtype=np.float64))
        self.low = low
        self.high = high

    def __call__(self, state, t):
        u = -self.gain.dot(state.x)
        if self.low is not None or self.high is not None:
            u = np.clip(u, self.low, self.high)
        if u.size == 1:
            return float(u[0])
        return u


class TabularPolicy(object):
    """Look an action up in a table.

    Args:
        table (dict): Mapping from key to action.
        key (str or callable): "q" keys the table by mode label, "bucket"
            by the integer part of the first state component, or a
            callable ``key(state, t)``.
        default: Action for keys missing from the table.  If None, a
            missing key raises PolicyDomainError.

    """

    def __init__(self, table, key="q", default=None):
        self.table = dict(table)
        self.key = key
        self.default = default

    def _key(self, state, t):
        if callable(self.key):
            return self.key(state, t)
        if self.key == "q":
            return state.q
        if self.key == "bucket":
            return int(np.floor(state.x[0]))
        raise ValueError("unknown policy key {!r}".format(self.key))

    def __call__(self, state, t):
        k = self._key(state, t)
        if k in self.table:
            return self.table[k]
        if str(k) in self.table:
            return self.table[str(k)]
        if self.default is not None:
            return self.default
        raise PolicyDomainError("no action for key {!r} at t={}".format(k, t))


def as_policy(obj):
    """Wrap None, a number, a sequence or a callable as a policy."""
    if obj is None:
        return ConstantPolicy(0.0)
    if callable(obj):
        return obj
    if isinstance(obj, (numbers.Number, str)):
        return ConstantPolicy(obj)
    return SequencePolicy(obj)


def _act(policy, state, t, who):
    try:
        a = policy(state, t)
    except PolicyDomainError:
        raise
    except (KeyError, IndexError) as e:
        raise PolicyDomainError(
            "{} policy undefined on {} at t={}: {}".format(who, state, t, e))
    if a is None:
        raise PolicyDomainError(
            "{} policy returned no action on {} at t={}".format(who, state, t))
    return a


class DisturbanceProcess(object):
    """Attacker and natural disturbance paths.

    The attacker path is a fixed sequence, a policy ``w(state, t)`` or
    None (no attack).  The natural path is a fixed sequence, None (zero),
    or a generator specification dictionary with a ``kind`` key:

        * ``{"kind": "zero"}``
        * ``{"kind": "fixed", "values": [...]}``
        * ``{"kind": "normal", "mean": 0, "std": 1}``
        * ``{"kind": "uniform", "low": 0, "high": 1}``
        * ``{"kind": "bernoulli", "p": 0.5, "magnitude": 1}``
        * ``{"kind": "poisson", "rate": 1}``

    Add ``"size": n`` for vector draws.  Draw t always comes from the
    counter-based stream keyed by (seed, stream, t), so the same seed
    reproduces the path bit-for-bit in any evaluation order.

    Args:
        attack: Attacker path or policy.
        natural: Natural path or generator specification.
        seed (int): Master seed.
        stream (int or str): Stream id of the natural disturbances.

    """

    kinds = ("zero", "fixed", "normal", "uniform", "bernoulli", "poisson")

    def __init__(self, attack=None, natural=None, seed=0, stream="natural"):
        self.attack = attack
        self.natural = natural
        self.seed = int(seed)
        self.stream = stream
        if isinstance(natural, dict):
            kind = natural.get("kind", "zero")
            if kind not in self.kinds:
                raise DomainError(
                    "unknown natural disturbance kind {!r}, expected one of "
                    "{}".format(kind, list(self.kinds)))

    def with_stream(self, stream):
        """Copy of this process reading natural draws from another stream."""
        return DisturbanceProcess(attack=self.attack, natural=self.natural,
                                  seed=self.seed, stream=stream)

    def horizon(self):
        """Length of the fixed paths, None where a path is unbounded."""
        out = dict(attack=None, natural=None)
        if self.attack is not None and not callable(self.attack) \
                and not isinstance(self.attack, numbers.Number):
            out["attack"] = len(self.attack)
        if isinstance(self.natural, dict):
            if self.natural.get("kind") == "fixed":
                out["natural"] = len(self.natural["values"])
        elif self.natural is not None:
            out["natural"] = len(self.natural)
        return out

    def natural_at(self, t):
        spec = self.natural
        if spec is None:
            return 0.0
        if not isinstance(spec, dict):
            return spec[t]
        kind = spec.get("kind", "zero")
        size = spec.get("size", None)
        if kind == "zero":
            return 0.0 if size is None else np.zeros(size)
        if kind == "fixed":
            return spec["values"][t]
        rng = streams.generator(self.seed, self.stream, t)
        if kind == "normal":
            val = rng.normal(spec.get("mean", 0.0), spec.get("std", 1.0),
                             size=size)
        elif kind == "uniform":
            val = rng.uniform(spec.get("low", 0.0), spec.get("high", 1.0),
                              size=size)
        elif kind == "bernoulli":
            hit = rng.random(size=size) < spec.get("p", 0.5)
            val = np.where(hit, spec.get("magnitude", 1.0), 0.0)
        else:
            val = rng.poisson(spec.get("rate", 1.0), size=size).astype(float)
        if size is None:
            return float(val)
        return val

    def natural_path(self, T):
        return [self.natural_at(t) for t in range(T)]


def _cell(v):
    if v is None:
        return np.nan
    if isinstance(v, (numbers.Number, np.number)):
        return float(v)
    if isinstance(v, str):
        return v
    arr = np.asarray(v)
    if arr.dtype.kind in "fiub":
        if arr.size == 1:
            return float(arr.reshape(-1)[0])
        return " ".join("{:.12g}".format(a) for a in arr.reshape(-1))
    return str(v)


class Trajectory(object):
    """Time-indexed record of a hybrid path.

    Records are indexed t = 0..T.  The inputs applied at the final record
    are never used and are stored as None.

    Args:
        x (array): States, shape (T+1, dim).
        q (list): Mode labels, length T+1.
        Q (array): Measured performance, length T+1.
        q_max (float): Nominal performance copied from the model.
        u (list, optional): Defender actions.
        w (list, optional): Attacker actions.
        xi (list, optional): Natural disturbances.
        model (str, optional): Name of the generating model.

    """

    def __init__(self, x, q, Q, q_max, u=None, w=None, xi=None, model=None):
        self.x = np.asarray(x, dtype=np.float64)
        if self.x.ndim == 1:
            self.x = self.x.reshape(-1, 1)
        n = len(self.x)
        self.q = [str(m) for m in q]
        self.Q = np.asarray(Q, dtype=np.float64)
        self.q_max = float(q_max)
        self.u = list(u) if u is not None else [None] * n
        self.w = list(w) if w is not None else [None] * n
        self.xi = list(xi) if xi is not None else [None] * n
        self.model = model
        for name, seq in (("q", self.q), ("Q", self.Q), ("u", self.u),
                          ("w", self.w), ("xi", self.xi)):
            if len(seq) != n:
                raise ModelMismatchError(
                    "trajectory field {} has {} records, expected {}".format(
                        name, len(seq), n))
        if np.any(self.Q < 0) or np.any(self.Q > self.q_max):
            raise DomainError("performance outside [0, q_max={}]".format(
                self.q_max))

    @classmethod
    def from_performance(cls, Q, q_max, modes=None):
        """Build a trajectory from a bare performance series.

        The state is the performance itself.  This is how recorded series
        are fed to the metrics.

        """
        Q = np.asarray(Q, dtype=np.float64)
        if modes is None:
            modes = ["normal"] * len(Q)
        return cls(Q.reshape(-1, 1), modes, Q, q_max)

    @property
    def T(self):
        return len(self.Q) - 1

    @property
    def t(self):
        return np.arange(len(self.Q))

    def __len__(self):
        return len(self.Q)

    def __repr__(self):
        return "Trajectory<{}, T={}, q_max={}>".format(
            self.model, self.T, self.q_max)

    def state(self, t):
        return HybridState(self.x[t], self.q[t])

    def shortfall(self):
        """Normalized shortfall 1 - Q_t/Q_max."""
        return 1.0 - self.Q / self.q_max

    def check(self, model):
        """Verify mode closure and measurement consistency against a model.
        """
        for t in range(len(self)):
            if self.q[t] not in model.modes:
                raise ModelMismatchError(
                    "mode {!r} at t={} not in model mode set".format(
                        self.q[t], t))
            if model.measure(self.x[t], self.q[t]) != self.Q[t]:
                raise ModelMismatchError(
                    "Q_t inconsistent with h(x_t, q_t) at t={}".format(t))

    def to_resultset(self):
        """Flat table with columns t, x0..x{n-1}, q, u, w, xi, Q."""
        xkeys = ["x{}".format(i) for i in range(self.x.shape[1])]
        rs = ResultSet(["t"] + xkeys + ["q", "u", "w", "xi", "Q"])
        for t in range(len(self)):
            row = [t] + [float(v) for v in self.x[t]]
            row += [self.q[t], _cell(self.u[t]), _cell(self.w[t]),
                    _cell(self.xi[t]), float(self.Q[t])]
            rs.rows.append(tuple(row))
        return rs


def rollout(model, defender, attacker, disturbances, s0, T):
    """Simulate a model over a horizon.

    Args:
        model (DynamicsModel): The dynamics.
        defender: Defender policy ``u(state, t)``, constant, path or None.
        attacker: Attacker policy, constant, path, or None to use the
            attack path of ``disturbances``.
        disturbances (DisturbanceProcess): Natural disturbances (and the
            default attack path).  None means no disturbance at all.
        s0 (HybridState): Initial state.
        T (int): Number of steps.

    Returns:
        (Trajectory): T+1 records.

    """
    if T < 1:
        raise DomainError("rollout horizon must be >= 1, got {}".format(T))
    model.check_state(s0)
    if disturbances is None:
        disturbances = DisturbanceProcess()
    if attacker is None:
        attacker = disturbances.attack
    spans = disturbances.horizon()
    if spans["natural"] is not None and spans["natural"] < T:
        raise DomainError("natural disturbance path of length {} does not "
                          "cover horizon {}".format(spans["natural"], T))
    dpol = as_policy(defender)
    apol = as_policy(attacker)
    if isinstance(apol, SequencePolicy) and len(apol) < T:
        raise DomainError("attack path of length {} does not cover horizon "
                          "{}".format(len(apol), T))

    xs = [np.array(s0.x)]
    qs = [s0.q]
    Qs = [model.measure(s0.x, s0.q)]
    us, ws, xis = list(), list(), list()
    s = s0
    for t in range(T):
        u = _act(dpol, s, t, "defender")
        w = _act(apol, s, t, "attacker")
        xi = disturbances.natural_at(t)
        s = simulate_step(model, s, u, w, xi)
        us.append(u)
        ws.append(w)
        xis.append(xi)
        xs.append(np.array(s.x))
        qs.append(s.q)
        Qs.append(model.measure(s.x, s.q))
    us.append(None)
    ws.append(None)
    xis.append(None)
    logger.debug("rollout of {} over T={} ended in mode {}".format(
        model.name, T, s.q))
    return Trajectory(np.array(xs), qs, Qs, model.q_max, u=us, w=ws, xi=xis,
                      model=model.name)
