# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""One-shot fallback switching for linear-quadratic dynamics.

The system is in the abnormal mode 0 and may commit, irreversibly, to the
safe mode 1 at a switching penalty lambda.  Over a two step horizon both
commitments have quadratic optimal costs x'Gamma(m)x + s_0 + s_m (+
lambda), so the switch rule is a quadratic threshold on the state.

"""

import logging
from collections import OrderedDict, namedtuple

import numpy as np
import scipy.linalg as la

from ..core.errors import DomainError, IllConditionedError, ModelMismatchError

logger = logging.getLogger(__name__)

#: Condition number above which a matrix to invert is rejected.
COND_LIMIT = 1e12


def _mat(v):
    return np.atleast_2d(np.asarray(v, dtype=np.float64))


class LQFallbackSpec(object):
    """Two-mode linear-quadratic model for fallback switching.

    Args:
        A (list): State matrices (A_0, A_1).
        B (array): Input matrix shared by both modes.
        Q (list): State costs (Q_0, Q_1), symmetric PSD.
        P (list): Terminal costs (P_0, P_1), symmetric PSD.
        R (array): Input cost, symmetric positive definite.
        s (list): Service-loss scalars (s_0, s_1) >= 0.
        lam (float): Switching penalty >= 0.

    """

    def __init__(self, A, B, Q, P, R, s=(0.0, 0.0), lam=0.0):
        self.A = [_mat(a) for a in A]
        self.Q = [_mat(q) for q in Q]
        self.P = [_mat(p) for p in P]
        self.B = _mat(B)
        if self.B.shape[0] != self.A[0].shape[0]:
            self.B = self.B.reshape(self.A[0].shape[0], -1)
        self.R = _mat(R)
        self.s = [float(v) for v in s]
        self.lam = float(lam)
        self.check()

    @classmethod
    def scalar(cls, a0, a1, q0=1.0, q1=1.0, p0=1.0, p1=1.0, r=1.0, b=1.0,
               s0=0.0, s1=0.0, lam=0.0):
        """Build a scalar specification."""
        return cls([a0, a1], b, [q0, q1], [p0, p1], r, s=(s0, s1), lam=lam)

    @property
    def n(self):
        return self.A[0].shape[0]

    @property
    def is_scalar(self):
        return self.n == 1 and self.B.shape[1] == 1

    def check(self):
        n = self.n
        k = self.B.shape[1]
        if len(self.A) != 2 or len(self.Q) != 2 or len(self.P) != 2 \
                or len(self.s) != 2:
            raise ModelMismatchError("fallback spec needs exactly two modes")
        for name, mats in (("A", self.A), ("Q", self.Q), ("P", self.P)):
            for m, a in enumerate(mats):
                if a.shape != (n, n):
                    raise ModelMismatchError(
                        "{}_{} has shape {}, expected {}".format(
                            name, m, a.shape, (n, n)))
        if self.B.shape[0] != n:
            raise ModelMismatchError("B has {} rows, expected {}".format(
                self.B.shape[0], n))
        if self.R.shape != (k, k):
            raise ModelMismatchError("R has shape {}, expected {}".format(
                self.R.shape, (k, k)))
        for name, mats in (("Q", self.Q), ("P", self.P)):
            for m, a in enumerate(mats):
                if not np.allclose(a, a.T, atol=1e-12):
                    raise DomainError("{}_{} is not symmetric".format(name, m))
                if np.min(np.linalg.eigvalsh(a)) < -1e-12:
                    raise DomainError("{}_{} is not PSD".format(name, m))
        if not np.allclose(self.R, self.R.T, atol=1e-12):
            raise DomainError("R is not symmetric")
        try:
            la.cholesky(self.R)
        except la.LinAlgError:
            raise DomainError("R is not positive definite")
        if min(self.s) < 0 or self.lam < 0:
            raise DomainError("service losses and switching penalty must "
                              "be nonnegative")

    def to_dict(self):
        return OrderedDict(
            A=[a.tolist() for a in self.A], B=self.B.tolist(),
            Q=[q.tolist() for q in self.Q], P=[p.tolist() for p in self.P],
            R=self.R.tolist(), s=list(self.s), lam=self.lam)


def _gain_solve(S, rhs):
    """Solve S X = rhs for symmetric positive definite S."""
    if np.linalg.cond(S) > COND_LIMIT:
        raise IllConditionedError(
            "R + B'PB has condition number above {:g}".format(COND_LIMIT))
    try:
        cf = la.cho_factor(S)
    except la.LinAlgError:
        raise IllConditionedError("R + B'PB is not positive definite")
    return la.cho_solve(cf, rhs)


def lq_fold(spec, m, P, A=None, Q=None):
    """One-step minimized quadratic coefficient.

    Pi = Q_m + A_m'PA_m - A_m'PB (R + B'PB)^-1 B'PA_m, symmetrized.

    Args:
        spec (LQFallbackSpec): The model.
        m (int): Mode whose A and Q are used.
        P (array): The terminal (next-stage) cost matrix.
        A, Q (array, optional): Override the mode matrices.

    Returns:
        (array): Pi, symmetric PSD.

    """
    A = spec.A[m] if A is None else _mat(A)
    Q = spec.Q[m] if Q is None else _mat(Q)
    P = _mat(P)
    B = spec.B
    S = spec.R + B.T.dot(P).dot(B)
    BPA = B.T.dot(P).dot(A)
    Pi = Q + A.T.dot(P).dot(A) - BPA.T.dot(_gain_solve(S, BPA))
    return 0.5 * (Pi + Pi.T)


def optimal_gain(spec, m, P):
    """Feedback gain K with u* = -K x for the fold of mode m through P."""
    B = spec.B
    P = _mat(P)
    S = spec.R + B.T.dot(P).dot(B)
    return _gain_solve(S, B.T.dot(P).dot(spec.A[m]))


def fallback_decision(spec, x):
    """Decide whether to commit to the safe mode now.

    Args:
        spec (LQFallbackSpec): The two-mode model, current mode 0.
        x (array): Current state.

    Returns:
        (dict): ``switch`` (bool), ``margin`` (J_1* - J_0*), ``Gamma``
            (Gamma(0), Gamma(1)), ``J`` (J_0*, J_1*), ``u`` (optimal first
            control under each commitment) and the switching ``lhs`` and
            ``rhs``.

    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != spec.n:
        raise ModelMismatchError("state has dimension {}, spec {}".format(
            len(x), spec.n))
    gammas, costs, controls = list(), list(), list()
    for m in (0, 1):
        Pi = lq_fold(spec, m, spec.P[m])
        G = lq_fold(spec, 0, Pi)
        gammas.append(G)
        J = float(x.dot(G).dot(x)) + spec.s[0] + spec.s[m]
        if m == 1:
            J += spec.lam
        costs.append(J)
        controls.append(-optimal_gain(spec, 0, Pi).dot(x))
    lhs = float(x.dot(gammas[0] - gammas[1]).dot(x))
    rhs = spec.lam + spec.s[1] - spec.s[0]
    switch = lhs > rhs
    logger.debug("fallback: lhs={:.6g} rhs={:.6g} switch={}".format(
        lhs, rhs, switch))
    return OrderedDict(switch=switch, margin=costs[1] - costs[0],
                       Gamma=gammas, J=costs, u=controls, lhs=lhs, rhs=rhs)


class SwitchThreshold(namedtuple("SwitchThreshold", ["threshold", "below"])):
    """Scalar switching rule on |x|.

    With ``below`` False the system switches iff |x| > threshold, where
    ``numpy.inf`` means never and ``-numpy.inf`` always.  With ``below``
    True it switches iff |x| < threshold: a cheap safe mode that only pays
    off while the state is small.

    """

    def switches(self, x):
        ax = abs(float(np.asarray(x, dtype=np.float64).reshape(-1)[0]))
        if self.below:
            return ax < self.threshold
        return ax > self.threshold


def scalar_switch_threshold(spec):
    """Closed-form switching rule on |x| for a scalar specification.

    The rule compares gap*x^2 with c = lam + s_1 - s_0, where gap is
    Gamma(0) - Gamma(1).  When both are negative the switching region is
    the bounded interval |x| < sqrt(c / gap).

    Returns:
        (SwitchThreshold): The threshold and its direction.

    """
    if not spec.is_scalar:
        raise ModelMismatchError("scalar threshold needs a scalar spec")
    a0 = spec.A[0][0, 0]
    b = spec.B[0, 0]
    r = spec.R[0, 0]
    pis = [lq_fold(spec, m, spec.P[m])[0, 0] for m in (0, 1)]
    gap = a0 ** 2 * r * (pis[0] / (r + b ** 2 * pis[0]) -
                         pis[1] / (r + b ** 2 * pis[1]))
    c = spec.lam + spec.s[1] - spec.s[0]
    if c < 0:
        if gap >= 0:
            return SwitchThreshold(-np.inf, False)
        return SwitchThreshold(float(np.sqrt(c / gap)), True)
    if gap <= 0:
        return SwitchThreshold(np.inf, False)
    return SwitchThreshold(float(np.sqrt(c / gap)), False)


def _commit_cost_grid(spec, x, m, u0, u1):
    """Two-step cost for commitment m over a grid of scalar controls."""
    A0, Am = spec.A[0], spec.A[m]
    b = spec.B[:, 0]
    r = spec.R[0, 0]
    # x1 for each u0: shape (n0, dim)
    x1 = A0.dot(x)[None, :] + u0[:, None] * b[None, :]
    stage0 = float(x.dot(spec.Q[0]).dot(x)) + r * u0 ** 2
    # x2 for each (u0, u1): shape (n0, n1, dim)
    ax1 = x1.dot(Am.T)
    x2 = ax1[:, None, :] + u1[None, :, None] * b[None, None, :]
    stage1 = np.einsum("ij,jk,ik->i", x1, spec.Q[m], x1)
    term = np.einsum("abj,jk,abk->ab", x2, spec.P[m], x2)
    cost = stage0[:, None] + stage1[:, None] + r * u1[None, :] ** 2 + term
    cost += spec.s[0] + spec.s[m] + (spec.lam if m == 1 else 0.0)
    return cost


def lq_fallback_bruteforce(spec, x, step=1e-3, bound=None, coarse=0.05):
    """Brute-force the two-step fallback costs on a control grid.

    A coarse grid over [-bound, bound]^2 locates the minimum, then a grid
    of spacing ``step`` is searched around it.  Only single-input specs
    are supported.

    Returns:
        (dict): ``J`` (minimal cost per commitment), ``u`` (argmin pairs)
            and ``switch``.

    """
    if spec.B.shape[1] != 1:
        raise ModelMismatchError("grid oracle supports a single input")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if bound is None:
        scale = max(1.0, np.abs(spec.A[0]).max(), np.abs(spec.A[1]).max())
        bound = min(50.0, 4.0 * scale ** 2 * (1.0 + np.abs(x).sum()))
    costs, args = list(), list()
    for m in (0, 1):
        c0 = 0.0
        c1 = 0.0
        half = bound
        h = coarse
        while True:
            g0 = np.arange(c0 - half, c0 + half + 0.5 * h, h)
            g1 = np.arange(c1 - half, c1 + half + 0.5 * h, h)
            cost = _commit_cost_grid(spec, x, m, g0, g1)
            i, j = np.unravel_index(np.argmin(cost), cost.shape)
            c0, c1 = g0[i], g1[j]
            if h <= step:
                break
            half = 4.0 * h
            h = max(step, h / 20.0)
        costs.append(float(cost[i, j]))
        args.append((float(c0), float(c1)))
    return OrderedDict(J=costs, u=args, switch=costs[1] < costs[0])
