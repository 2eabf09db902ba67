# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Two-player zero-sum matrix games.
"""

import logging
from collections import namedtuple

import numpy as np
from scipy.optimize import linprog

from ..core.errors import DomainError

logger = logging.getLogger(__name__)

MatrixGameSolution = namedtuple("MatrixGameSolution", ["value", "row", "col"])

_lp_options = dict(primal_feasibility_tolerance=1e-10,
                   dual_feasibility_tolerance=1e-10)


def _clean(x):
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return x / x.sum()


def _pure_saddle(M):
    """Return (i, j) of a pure saddle point, or None."""
    row_min = M.min(axis=1)
    col_max = M.max(axis=0)
    i = int(np.argmax(row_min))
    j = int(np.argmin(col_max))
    if row_min[i] == col_max[j]:
        return i, j
    return None


def solve_matrix_game(M):
    """Solve a zero-sum matrix game for the row maximizer.

    Pure saddle points are detected first (lowest indices win).  Otherwise
    the payoffs are shifted to be positive and the two standard linear
    programs are solved with HiGHS:

        row:     min 1'x  s.t.  M'x >= 1, x >= 0,   v = 1/1'x, p = v x
        column:  max 1'y  s.t.  M y <= 1, y >= 0,   q = v y

    Args:
        M (array): Payoff matrix for the row player.

    Returns:
        (MatrixGameSolution): value, row strategy and column strategy.

    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0:
        raise DomainError("empty payoff matrix")
    if not np.all(np.isfinite(M)):
        raise DomainError("payoff matrix has NaN or infinite entries")
    nr, nc = M.shape
    saddle = _pure_saddle(M)
    if saddle is not None:
        i, j = saddle
        p = np.zeros(nr)
        q = np.zeros(nc)
        p[i] = 1.0
        q[j] = 1.0
        return MatrixGameSolution(float(M[i, j]), p, q)

    shift = 1.0 - M.min()
    Ms = M + shift
    res_row = linprog(np.ones(nr), A_ub=-Ms.T, b_ub=-np.ones(nc),
                      bounds=(0, None), method="highs", options=_lp_options)
    res_col = linprog(-np.ones(nc), A_ub=Ms, b_ub=np.ones(nr),
                      bounds=(0, None), method="highs", options=_lp_options)
    if not (res_row.success and res_col.success):
        raise DomainError("matrix game LP failed: {} / {}".format(
            res_row.message, res_col.message))
    p = _clean(res_row.x)
    q = _clean(res_col.x)
    lower = float(np.min(p.dot(M)))
    upper = float(np.max(M.dot(q)))
    value = 0.5 * (lower + upper)
    logger.debug("matrix game {}x{}: value {:.12g} gap {:.3g}".format(
        nr, nc, value, upper - lower))
    return MatrixGameSolution(value, p, q)


def saddle_gap(M, p, q):
    """max_i (M q)_i - min_j (p'M)_j; zero at a saddle point."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    return float(np.max(M.dot(q)) - np.min(np.asarray(p).dot(M)))
