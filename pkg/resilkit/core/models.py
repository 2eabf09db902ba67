# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Built-in dynamics models.

Each function returns a :class:`~resilkit.core.dynamics.DynamicsModel`.
:func:`build_model` constructs any of them from a scenario-file block.

"""

import operator

import numpy as np

from .dynamics import DynamicsModel
from .errors import DomainError, ModelMismatchError


def _vec(v, n):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size == 1 and n > 1:
        v = np.full(n, v[0])
    return v


def _measure(kind, q_max, capacity=None):
    """Return the measurement map for a named measurement kind."""
    if kind == "identity":
        return lambda x, q: x[0]
    if kind == "deviation":
        return lambda x, q: q_max - np.linalg.norm(x)
    if kind == "headroom":
        if capacity is None or capacity <= 0:
            raise DomainError("headroom measurement needs capacity > 0")
        return lambda x, q: q_max * (1.0 - x[0] / capacity)
    raise DomainError("unknown measurement {!r}; expected identity, "
                      "deviation or headroom".format(kind))


def switched_linear(A, B=1.0, modes=None, q_max=1.0, measure="deviation",
                    trigger=0.0, recover_band=None, name="switched_linear"):
    """Mode-switched linear dynamics x' = A_q x + B u + w + xi.

    The mode map is the two-regime rule: an input disturbance whose
    magnitude exceeds ``trigger`` moves the system to the abnormal (second)
    mode; from there it returns to the normal (first) mode once ``|x|`` is
    back inside ``recover_band``.  With a single mode the map is constant.

    Args:
        A (dict): Mode label to state matrix (or scalar).
        B (array): Input matrix shared by all modes.
        modes (list, optional): Mode order; default is the order of A.
        q_max (float): Nominal performance.
        measure (str): "identity", "deviation" (q_max - |x|) or "headroom".
        trigger (float): Disturbance magnitude that triggers the abnormal mode.
        recover_band (float, optional): State norm for returning to normal.
            None means the abnormal mode is absorbing.

    """
    if modes is None:
        modes = list(A.keys())
    mats = dict()
    dim = None
    for m in modes:
        a = np.atleast_2d(np.asarray(A[m], dtype=np.float64))
        if a.shape[0] != a.shape[1]:
            raise ModelMismatchError("A[{}] is not square".format(m))
        if dim is None:
            dim = a.shape[0]
        elif a.shape[0] != dim:
            raise ModelMismatchError("A matrices have different sizes")
        mats[m] = a
    Bm = np.asarray(B, dtype=np.float64)
    if Bm.ndim == 0:
        Bm = np.full((dim, 1), float(Bm))
    elif Bm.ndim == 1:
        Bm = Bm.reshape(dim, -1)
    normal = modes[0]
    abnormal = modes[1] if len(modes) > 1 else modes[0]

    def f(x, u, w, xi, q):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        return mats[q].dot(x) + Bm.dot(u) + _vec(w, dim) + _vec(xi, dim)

    def phi(q, x, u, w, xi):
        mag = np.abs(np.asarray(w, dtype=float)).sum() + \
            np.abs(np.asarray(xi, dtype=float)).sum()
        if mag > trigger:
            return abnormal
        if q == abnormal and recover_band is not None and \
                np.linalg.norm(x) <= recover_band:
            return normal
        return q

    params = dict(kind="switched_linear", measure=measure, trigger=trigger,
                  recover_band=recover_band)
    return DynamicsModel(name, dim, modes, f, phi=phi,
                         h=_measure(measure, q_max), q_max=q_max,
                         params=params)


def scalar_linear(a=0.5, b=1.0, q_max=1.0, measure="identity",
                  name="scalar_linear"):
    """Single-mode scalar model x' = a x + b u + w + xi.
    """
    model = switched_linear({"normal": a}, B=b, q_max=q_max,
                            measure=measure, name=name)
    model.params.update(kind="scalar_linear", a=a, b=b)
    return model


def identity_model(dim=1, q_max=1.0, modes=("normal",), name="constant_hold"):
    """Constant-hold model: f is the identity on x and q never changes."""
    def f(x, u, w, xi, q):
        return x
    return DynamicsModel(name, dim, modes, f, q_max=q_max,
                         params=dict(kind="identity"))


def slice_queue(lam0=2.0, mu=4.0, threshold=10.0, attack_rate=0.0,
                q_max=1.0, capacity=None, measure="identity",
                name="slice_queue"):
    """Control-plane signaling queue x' = max(0, x + lam0 + xi + w - mu - u).

    The attacker input w is the malicious arrival rate, the natural input
    xi perturbs legitimate arrivals and the defender input u is extra
    service bought by elastic scaling.  Modes: ``attack`` when w exceeds
    ``attack_rate``, else ``overload`` when the current queue exceeds
    ``threshold``, else ``normal``.

    """
    def f(x, u, w, xi, q):
        return x + lam0 + float(xi) + float(w) - (mu + float(u))

    def phi(q, x, u, w, xi):
        if float(w) > attack_rate:
            return "attack"
        if x[0] > threshold:
            return "overload"
        return "normal"

    if capacity is not None:
        h = _measure("headroom", q_max, capacity)
    else:
        h = _measure(measure, q_max)
    params = dict(kind="slice_queue", lam0=lam0, mu=mu, threshold=threshold,
                  attack_rate=attack_rate, capacity=capacity)
    return DynamicsModel(name, 1, ["normal", "overload", "attack"], f,
                         phi=phi, h=h, q_max=q_max, lower=0.0, params=params)


def backhaul_capacity(b_max=10.0, cut_drop=5.0, degraded_frac=0.8,
                      name="backhaul_capacity"):
    """Transport capacity B' = clip(B - cut_drop*xi - w + u, 0, b_max).

    A natural fiber cut (xi=1) removes ``cut_drop``, the attacker removes
    w and rerouting or backup links restore u.  Performance is the
    available capacity.

    """
    def f(x, u, w, xi, q):
        return x - cut_drop * float(xi) - float(w) + float(u)

    def phi(q, x, u, w, xi):
        b = np.clip(x[0] - cut_drop * float(xi) - float(w) + float(u),
                    0.0, b_max)
        if b <= 0:
            return "partitioned"
        if b < degraded_frac * b_max:
            return "degraded"
        return "normal"

    params = dict(kind="backhaul_capacity", b_max=b_max, cut_drop=cut_drop,
                  degraded_frac=degraded_frac)
    return DynamicsModel(name, 1, ["normal", "degraded", "partitioned"], f,
                         phi=phi, q_max=b_max, lower=0.0, upper=b_max,
                         params=params)


_ops = {
    ">": operator.gt,
    ">=": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
}


def _rule_value(var, x, u, w, xi):
    if var.startswith("x"):
        return x[int(var[1:] or 0)]
    vals = dict(u=u, w=w, xi=xi)
    if var not in vals:
        raise DomainError("unknown rule variable {!r}".format(var))
    return float(np.asarray(vals[var], dtype=float).reshape(-1)[0])


def mode_rules(rules, modes):
    """Compile a list of mode-transition rules into a mode map.

    Each rule is a dict ``{"from": q or "*", "to": q', "var": "x0",
    "op": ">", "value": v}``.  The first matching rule wins; when none
    matches the mode is unchanged.

    """
    for i, r in enumerate(rules):
        for q in (r.get("from", "*"), r["to"]):
            if q != "*" and q not in modes:
                raise ModelMismatchError(
                    "rule {} references unknown mode {!r}".format(i, q))
        if r.get("op", ">") not in _ops:
            raise DomainError("rule {} has unknown operator {!r}".format(
                i, r.get("op")))

    def phi(q, x, u, w, xi):
        for r in rules:
            if r.get("from", "*") not in ("*", q):
                continue
            val = _rule_value(r.get("var", "x0"), x, u, w, xi)
            if _ops[r.get("op", ">")](val, r.get("value", 0.0)):
                return r["to"]
        return q

    return phi


def tabular(modes, A, B=None, c=None, rules=(), q_max=1.0,
            measure="identity", capacity=None, lower=None, upper=None,
            name="tabular"):
    """User-defined affine model loaded from a table.

    x' = A_q x + B_q u + c_q + w + xi with per-mode matrices and a rule
    table for the mode map (see :func:`mode_rules`).

    """
    dim = None
    Am, Bm, cm = dict(), dict(), dict()
    for m in modes:
        if m not in A:
            raise ModelMismatchError("no state matrix for mode {!r}".format(m))
        Am[m] = np.atleast_2d(np.asarray(A[m], dtype=np.float64))
        if dim is None:
            dim = Am[m].shape[0]
        if Am[m].shape != (dim, dim):
            raise ModelMismatchError(
                "state matrix for mode {!r} has shape {}, expected {}".format(
                    m, Am[m].shape, (dim, dim)))
    for m in modes:
        b = np.ones((dim, 1)) if B is None else np.asarray(
            B[m] if isinstance(B, dict) else B, dtype=np.float64)
        Bm[m] = b.reshape(dim, -1)
        cv = 0.0 if c is None else (c[m] if isinstance(c, dict) else c)
        cm[m] = _vec(cv, dim)

    def f(x, u, w, xi, q):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        return Am[q].dot(x) + Bm[q].dot(u) + cm[q] + _vec(w, dim) + \
            _vec(xi, dim)

    params = dict(kind="tabular", rules=list(rules))
    return DynamicsModel(name, dim, modes, f, phi=mode_rules(rules, modes),
                         h=_measure(measure, q_max, capacity), q_max=q_max,
                         lower=lower, upper=upper, params=params)


def build_model(block):
    """Construct a model from a scenario ``model`` block.

    Args:
        block (dict): Must contain ``kind``; the other keys are the keyword
            arguments of the matching builder.

    Returns:
        (DynamicsModel): The model.  A ``mode_rules`` entry overrides the
            built-in mode map.

    """
    block = dict(block)
    kind = block.pop("kind")
    rules = block.pop("mode_rules", None)
    builders = dict(
        scalar_linear=scalar_linear,
        switched_linear=switched_linear,
        identity=identity_model,
        slice_queue=slice_queue,
        backhaul_capacity=backhaul_capacity,
        tabular=tabular,
    )
    if kind not in builders:
        raise DomainError("unknown model kind {!r}; expected one of {}".format(
            kind, sorted(builders)))
    model = builders[kind](**block)
    if rules is not None:
        model = model.with_mode_map(mode_rules(rules, model.modes))
    return model


model_kinds = ("scalar_linear", "switched_linear", "identity", "slice_queue",
               "backhaul_capacity", "tabular")
