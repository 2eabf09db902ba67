# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Sample statistics and tail risk measures on weighted samples.
"""

import numpy as np

from .errors import DomainError


def _weights(samples, weights):
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if len(x) == 0:
        raise DomainError("no samples")
    if weights is None:
        p = np.full(len(x), 1.0 / len(x))
    else:
        p = np.asarray(weights, dtype=np.float64).reshape(-1)
        if p.shape != x.shape:
            raise DomainError("{} weights for {} samples".format(
                len(p), len(x)))
        if np.any(p < 0):
            raise DomainError("sample weights must be nonnegative")
        total = p.sum()
        if total <= 0:
            raise DomainError("sample weights sum to zero")
        p = p / total
    return x, p


def var_cvar(samples, alpha, weights=None):
    """Value at risk and conditional value at risk of a discrete loss.

    CVaR_alpha = min_eta { eta + E[(L - eta)_+] / (1 - alpha) }, evaluated
    exactly: the losses are sorted in decreasing order and averaged over
    the top (1 - alpha) probability mass, splitting the atom that straddles
    the alpha-quantile.

    Args:
        samples (array): Loss samples.
        alpha (float): Level in [0, 1).
        weights (array, optional): Sample probabilities (normalized here).
            Default is equal weights.

    Returns:
        (tuple): (VaR_alpha, CVaR_alpha).  VaR is the smallest eta with
            P(L <= eta) >= alpha, which attains the minimum.

    """
    if not (0.0 <= alpha < 1.0):
        raise DomainError("CVaR level must lie in [0, 1), got {}".format(
            alpha))
    x, p = _weights(samples, weights)
    if alpha == 0.0:
        return float(np.min(x[p > 0])), float(np.dot(p, x))
    order = np.argsort(-x, kind="stable")
    xs = x[order]
    ps = p[order]
    tail = 1.0 - alpha
    acc = 0.0
    total = 0.0
    var = xs[-1]
    for xi, pi in zip(xs, ps):
        if pi == 0:
            continue
        take = min(pi, tail - acc)
        total += take * xi
        acc += take
        var = xi
        if acc >= tail * (1.0 - 1e-15):
            break
    return float(var), float(total / tail)


def cvar(samples, alpha, weights=None):
    """CVaR_alpha of a discrete loss; see :func:`var_cvar`."""
    return var_cvar(samples, alpha, weights=weights)[1]


def cvar_objective(samples, eta, alpha, weights=None):
    """The minimization form eta + E[(L - eta)_+]/(1 - alpha) at one eta."""
    x, p = _weights(samples, weights)
    return float(eta + np.dot(p, np.maximum(x - eta, 0.0)) / (1.0 - alpha))


def mean_var(samples):
    """Sample mean and unbiased variance.

    Returns:
        (tuple): (mean, variance, defined).  With a single sample the
            variance is NaN and ``defined`` is False.

    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if len(x) == 0:
        raise DomainError("no samples")
    mean = float(np.mean(x))
    if len(x) < 2:
        return mean, float("nan"), False
    return mean, float(np.var(x, ddof=1)), True
