# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Moving target defense as KL-regularized reconfiguration.

The defender keeps a distribution f over a finite set of configurations
and moves it toward low-risk configurations while a KL trust region
limits churn.  The one-step problem

    min_f  sum_c f(c) [r(c) + lambda'phi(c) + Q(c)] + eps KL(f || f_prev)

has the closed-form solution f(c) ~ f_prev(c) exp(-[r(c) + lambda'phi(c)
+ Q(c)] / eps).  Over a horizon, the attack surface evolves with the
deployed configuration and the cost-to-go Q is obtained by backward
recursion on the surface graph.

"""

import logging
from collections import OrderedDict

import numpy as np
from scipy.special import rel_entr

from ..core.errors import DomainError, TransitionDomainError
from ..core.resultset import ResultSet

logger = logging.getLogger(__name__)


def check_distribution(f, tol=1e-12, full_support=True):
    """Validate a simplex element, returning it as a float array."""
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    if len(f) == 0:
        raise DomainError("empty distribution")
    if np.any(f < 0) or abs(f.sum() - 1.0) > tol:
        raise DomainError("not a distribution: {}".format(f.tolist()))
    if full_support and np.any(f == 0):
        raise DomainError("distribution must have full support")
    return f


def kl_divergence(p, q):
    """KL(p || q) for discrete distributions."""
    return float(np.sum(rel_entr(np.asarray(p, float), np.asarray(q, float))))


def _tilt(n, risk, features=None, duals=None, cost_to_go=None):
    z = np.asarray(risk, dtype=np.float64).reshape(-1)
    if len(z) != n:
        raise DomainError("{} risks for {} configurations".format(len(z), n))
    if features is not None and duals is not None:
        phi = np.asarray(features, dtype=np.float64).reshape(n, -1)
        lam = np.asarray(duals, dtype=np.float64).reshape(-1)
        if np.any(lam < 0):
            raise DomainError("dual multipliers must be nonnegative")
        z = z + phi.dot(lam)
    if cost_to_go is not None:
        z = z + np.asarray(cost_to_go, dtype=np.float64).reshape(-1)
    return z


def mtd_update(f_prev, risk, eps, features=None, duals=None, cost_to_go=None):
    """Softmax update of the configuration distribution.

    Args:
        f_prev (array): Current distribution, full support.
        risk (array): Stage risk estimate per configuration.
        eps (float): KL weight, > 0.
        features (array, optional): Feature matrix phi(c), one row per
            configuration.
        duals (array, optional): Multipliers for the feature constraints.
        cost_to_go (array, optional): Look-ahead term per configuration.

    Returns:
        (array): The updated distribution.

    """
    if eps <= 0:
        raise DomainError("eps must be positive, got {}".format(eps))
    f_prev = check_distribution(f_prev)
    z = _tilt(len(f_prev), risk, features, duals, cost_to_go)
    return _softmax(f_prev, z, eps)


def _softmax(f_prev, z, eps):
    if np.ptp(z) == 0:
        return f_prev.copy()
    # Shifting by the minimum keeps the largest exponent at zero.
    w = f_prev * np.exp(-(z - z.min()) / eps)
    return w / w.sum()


def mtd_objective(f, f_prev, risk, eps, features=None, duals=None,
                  cost_to_go=None):
    """Regularized one-step objective minimized by :func:`mtd_update`."""
    f = np.asarray(f, dtype=np.float64)
    z = _tilt(len(f), risk, features, duals, cost_to_go)
    return float(np.dot(f, z) + eps * kl_divergence(f, f_prev))


class MTDState(object):
    """Planning state for moving target defense.

    Args:
        configs (list): Configuration names.
        f (array): Current distribution over configs.
        risk (array or dict): Stage risk per config, or a dict from surface
            to per-config risks.
        eps (float): KL weight.
        alpha (float): Surface-shaping weight.
        features (array, optional): Resource/QoS feature rows phi(c) >= 0.
        duals (array, optional): Multipliers for the features.
        cost_to_go (array, optional): Look-ahead term for direct updates.
            The horizon planner computes its own.
        surface (hashable, optional): Current attack surface.
        transition (dict, optional): surface -> {config: next surface}.
            None keeps the surface fixed.
        psi (dict or callable, optional): Shaping value per surface,
            default 0.
        constraints (list, optional): Extra penalty hooks
            ``hook(config, surface) -> float`` added to the risk.

    """

    def __init__(self, configs, f, risk, eps, alpha=0.0, features=None,
                 duals=None, cost_to_go=None, surface=None, transition=None,
                 psi=None, constraints=None):
        self.configs = [str(c) for c in configs]
        self.f = check_distribution(f)
        if len(self.f) != len(self.configs):
            raise DomainError("{} probabilities for {} configurations".format(
                len(self.f), len(self.configs)))
        if eps <= 0:
            raise DomainError("eps must be positive, got {}".format(eps))
        if alpha < 0:
            raise DomainError("alpha must be nonnegative")
        self.risk = risk
        self.eps = float(eps)
        self.alpha = float(alpha)
        if features is not None and np.any(np.asarray(features) < 0):
            raise DomainError("configuration features must be nonnegative")
        self.features = features
        self.duals = duals
        self.cost_to_go = cost_to_go
        self.surface = surface
        self.transition = transition
        self.psi = psi
        self.constraints = list() if constraints is None else list(constraints)

    def risk_at(self, surface):
        """Per-configuration risk on a surface, hooks included."""
        if isinstance(self.risk, dict):
            if surface not in self.risk:
                raise TransitionDomainError(
                    "no risk estimates for surface {!r}".format(surface))
            r = np.asarray(self.risk[surface], dtype=np.float64)
        else:
            r = np.asarray(self.risk, dtype=np.float64)
        if len(r) != len(self.configs):
            raise DomainError("{} risks for {} configurations".format(
                len(r), len(self.configs)))
        if len(self.constraints) > 0:
            r = r + np.array([sum(h(c, surface) for h in self.constraints)
                              for c in self.configs])
        return r

    def shaping(self, surface):
        if self.psi is None:
            return 0.0
        if callable(self.psi):
            return float(self.psi(surface))
        return float(self.psi.get(surface, 0.0))

    def next_surface(self, surface, config):
        if self.transition is None:
            return surface
        if surface not in self.transition or \
                config not in self.transition[surface]:
            raise TransitionDomainError(
                "surface transition undefined for ({!r}, {!r})".format(
                    surface, config))
        return self.transition[surface][config]

    def update(self, risk=None):
        """Single softmax update from the current distribution."""
        r = self.risk_at(self.surface) if risk is None else risk
        return mtd_update(self.f, r, self.eps, features=self.features,
                          duals=self.duals, cost_to_go=self.cost_to_go)


def _reachable(state, H):
    """Surfaces reachable at each stage 0..H."""
    layers = [[state.surface]]
    for k in range(H):
        nxt = list()
        for a in layers[-1]:
            for c in state.configs:
                b = state.next_surface(a, c)
                if b not in nxt:
                    nxt.append(b)
        layers.append(nxt)
    return layers


def mtd_plan_horizon(state, H):
    """Plan H stages of configuration distributions.

    The cost-to-go is computed backwards over the reachable surfaces,
    V_k(A) = min_c [r(c, A) + alpha psi(A) + V_{k+1}(g(A, c))], V_H = 0,
    and stage k uses Q_k(c) = sum_A rho_k(A) V_{k+1}(g(A, c)) where rho_k
    is the predicted surface distribution.  The forward pass applies
    :func:`mtd_update` at every stage and propagates rho.

    Args:
        state (MTDState): The planning state.
        H (int): Horizon, >= 1.

    Returns:
        (dict): ``distributions`` (H arrays f_1..f_H), ``objective`` (sum
            over stages of expected risk + eps KL + alpha psi), ``stages``
            (ResultSet of the per-stage terms) and ``surfaces`` (predicted
            surface distribution per stage).

    """
    if H < 1:
        raise DomainError("horizon must be >= 1, got {}".format(H))
    layers = _reachable(state, H)
    V = [dict() for _ in range(H + 1)]
    for a in layers[H]:
        V[H][a] = 0.0
    for k in range(H - 1, -1, -1):
        for a in layers[k]:
            r = state.risk_at(a)
            nxt = np.array([V[k + 1][state.next_surface(a, c)]
                            for c in state.configs])
            V[k][a] = float(np.min(r + nxt)) + state.alpha * state.shaping(a)

    rho = OrderedDict([(state.surface, 1.0)])
    f = state.f
    dists, surfaces = list(), list()
    stages = ResultSet(["stage", "expected_risk", "kl", "shaping", "objective"])
    total = 0.0
    for k in range(H):
        rbar = np.zeros(len(state.configs))
        ctg = np.zeros(len(state.configs))
        psibar = 0.0
        for a, pa in rho.items():
            rbar += pa * state.risk_at(a)
            psibar += pa * state.shaping(a)
            ctg += pa * np.array([V[k + 1][state.next_surface(a, c)]
                                  for c in state.configs])
        z = _tilt(len(f), rbar, state.features, state.duals, ctg)
        f_next = _softmax(f, z, state.eps)
        risk_term = float(np.dot(f_next, rbar))
        kl = kl_divergence(f_next, f)
        stage = risk_term + state.eps * kl + state.alpha * psibar
        stages.rows.append((k, risk_term, kl, psibar, stage))
        total += stage
        surfaces.append(dict(rho))
        new_rho = OrderedDict()
        for a, pa in rho.items():
            for c, fc in zip(state.configs, f_next):
                b = state.next_surface(a, c)
                new_rho[b] = new_rho.get(b, 0.0) + pa * fc
        rho = new_rho
        dists.append(f_next)
        f = f_next
        logger.debug("mtd stage {}: risk={:.6g} kl={:.6g}".format(
            k, risk_term, kl))
    return OrderedDict(distributions=dists, objective=total, stages=stages,
                       surfaces=surfaces)
