# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Spatial networks, percolation, SIS spreading and spectral indicators.

Devices are scattered by a Poisson point process on a square torus of side
a and linked when their torus distance is at most the connection radius.
The torus removes boundary effects so the mean degree is exactly
lambda pi rad^2 (single class).

"""

import logging
from collections import OrderedDict

import networkx as nx
import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.stats import chi2, poisson

from .core.errors import DomainError, NonConvergenceError, StepSizeError
from .core.resultset import ResultSet
from .core import streams

logger = logging.getLogger(__name__)


class SpatialNetwork(object):
    """A random geometric graph on a torus.

    Attributes:
        points (array): Node positions, shape (n, 2).
        side (float): Torus side a.
        radius (array): Connection radius per node.
        classes (list): (intensity, radius) of each device class.
        edges (array): Edge list (i < j), shape (m, 2).
        adjacency (scipy.sparse.csr_matrix): Symmetric 0/1 adjacency.
        degenerate (bool): True if some radius exceeds a/2.

    """

    def __init__(self, points, side, radius, classes, edges):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        self.side = float(side)
        self.radius = np.asarray(radius, dtype=np.float64)
        self.classes = [tuple(c) for c in classes]
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = len(self.points)
        if len(self.edges) > 0:
            i, j = self.edges[:, 0], self.edges[:, 1]
            data = np.ones(2 * len(i))
            self.adjacency = sp.csr_matrix(
                (data, (np.concatenate([i, j]), np.concatenate([j, i]))),
                shape=(n, n))
        else:
            self.adjacency = sp.csr_matrix((n, n))
        self.degenerate = bool(len(self.radius) > 0 and
                               np.max(self.radius) > 0.5 * self.side)

    @property
    def n(self):
        return len(self.points)

    @property
    def degrees(self):
        return np.asarray(self.adjacency.sum(axis=1)).reshape(-1).astype(
            np.int64)

    @property
    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges.tolist())
        return g

    @property
    def theoretical_mean_degree(self):
        """lambda pi rad^2 for a single class, otherwise None."""
        if len(self.classes) != 1:
            return None
        lam, rad = self.classes[0]
        return float(lam * np.pi * rad ** 2)

    def write_edgelist(self, path):
        """Write one ``i j`` line per edge."""
        nx.write_edgelist(self.graph, path, data=False)

    def __repr__(self):
        return "SpatialNetwork<n={}, m={}, a={}>".format(
            self.n, len(self.edges), self.side)


def _torus_dist(p, q, side):
    d = np.abs(p - q)
    d = np.minimum(d, side - d)
    return np.sqrt(np.sum(d * d, axis=-1))


def sample_rgg(lam, side, rad, seed=0, classes=None, stream="rgg"):
    """Sample a Poisson random geometric graph on a torus.

    Args:
        lam (float): Intensity (nodes per unit area), >= 0.
        side (float): Torus side a > 0.
        rad (float): Connection radius >= 0.
        seed (int): Master seed.
        classes (list, optional): Heterogeneous (intensity, radius) device
            classes, sampled as independent processes.  Overrides lam and
            rad.  Two nodes connect iff their distance is at most the
            smaller of their radii.
        stream (str): Random stream id.

    Returns:
        (SpatialNetwork): The network.

    """
    if side <= 0:
        raise DomainError("torus side must be positive, got {}".format(side))
    if classes is None:
        classes = [(lam, rad)]
    for c_lam, c_rad in classes:
        if c_lam < 0 or c_rad < 0:
            raise DomainError("intensity and radius must be nonnegative")
    rng = streams.generator(seed, stream, 0)
    pts, radii = list(), list()
    for c_lam, c_rad in classes:
        n = rng.poisson(c_lam * side * side)
        pts.append(rng.uniform(0.0, side, size=(n, 2)))
        radii.append(np.full(n, float(c_rad)))
    points = np.concatenate(pts) if len(pts) > 0 else np.zeros((0, 2))
    radius = np.concatenate(radii) if len(radii) > 0 else np.zeros(0)
    # cKDTree rejects points exactly at the box edge.
    points = np.mod(points, side)
    edges = np.zeros((0, 2), dtype=np.int64)
    rmax = float(np.max(radius)) if len(radius) > 0 else 0.0
    if len(points) > 1 and rmax > 0:
        tree = cKDTree(points, boxsize=side)
        pairs = tree.query_pairs(rmax, output_type="ndarray")
        if len(pairs) > 0 and len(classes) > 1:
            d = _torus_dist(points[pairs[:, 0]], points[pairs[:, 1]], side)
            keep = d <= np.minimum(radius[pairs[:, 0]], radius[pairs[:, 1]])
            pairs = pairs[keep]
        edges = np.sort(pairs, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    net = SpatialNetwork(points, side, radius, classes, edges)
    if net.degenerate:
        logger.warning("connection radius exceeds half the torus side; the "
                       "torus metric wraps")
    logger.debug("sampled {}".format(net))
    return net


def degree_stats(net, min_expected=5.0):
    """Degree histogram against the Poisson law with mean lambda pi rad^2.

    The chi-square statistic pools the upper tail (and any sparse bins)
    so that every bin expects at least ``min_expected`` nodes.

    Returns:
        (dict): ``histogram``, ``mean``, ``stderr``, ``pmf``
            (theoretical, None for several classes), ``chi2``, ``dof`` and
            ``p_value``.

    """
    if net.n == 0:
        raise DomainError("degree statistics of an empty network")
    deg = net.degrees
    hist = np.bincount(deg)
    out = OrderedDict(histogram=hist, mean=float(np.mean(deg)))
    out["stderr"] = float(np.std(deg, ddof=1) / np.sqrt(net.n)) \
        if net.n > 1 else 0.0
    m = net.theoretical_mean_degree
    out["theoretical_mean"] = m
    if m is None:
        out["pmf"] = None
        out["chi2"] = None
        out["dof"] = None
        out["p_value"] = None
        return out
    k = np.arange(len(hist))
    out["pmf"] = poisson.pmf(k, m)
    # Bins 0..K-1 with the last bin holding the tail P(deg >= K-1).
    expected = list()
    observed = list()
    acc_e = 0.0
    acc_o = 0
    kmax = max(len(hist), int(m + 10 * np.sqrt(m + 1)) + 1)
    for kk in range(kmax):
        acc_e += net.n * poisson.pmf(kk, m)
        acc_o += int(hist[kk]) if kk < len(hist) else 0
        if acc_e >= min_expected:
            expected.append(acc_e)
            observed.append(acc_o)
            acc_e = 0.0
            acc_o = 0
    tail_e = net.n * poisson.sf(kmax - 1, m) + acc_e
    tail_o = int(np.sum(deg >= kmax)) + acc_o
    if len(expected) > 0:
        expected[-1] += tail_e
        observed[-1] += tail_o
    else:
        expected.append(tail_e)
        observed.append(tail_o)
    E = np.array(expected)
    O = np.array(observed, dtype=np.float64)
    stat = float(np.sum((O - E) ** 2 / E))
    dof = max(len(E) - 1, 1)
    out["chi2"] = stat
    out["dof"] = dof
    out["p_value"] = float(chi2.sf(stat, dof))
    return out


def largest_component_fraction(net, keep=None):
    """Fraction of all nodes in the largest component (of kept nodes)."""
    if net.n == 0:
        return 0.0
    g = net.graph
    if keep is not None:
        g = g.subgraph(np.nonzero(keep)[0].tolist())
    if g.number_of_nodes() == 0:
        return 0.0
    return max(len(c) for c in nx.connected_components(g)) / float(net.n)


def _threshold(grid, mean, level=0.5):
    for i in range(1, len(grid)):
        if mean[i - 1] < level <= mean[i]:
            f = (level - mean[i - 1]) / (mean[i] - mean[i - 1])
            return float(grid[i - 1] + f * (grid[i] - grid[i - 1])), True
    return float("nan"), False


def _curve(grid, fractions):
    rs = ResultSet(["param", "mean_fraction", "stderr"])
    means = list()
    for g, fr in zip(grid, fractions):
        fr = np.asarray(fr)
        se = float(np.std(fr, ddof=1) / np.sqrt(len(fr))) if len(fr) > 1 \
            else 0.0
        means.append(float(np.mean(fr)))
        rs.rows.append((float(g), means[-1], se))
    thr, bracketed = _threshold(grid, means)
    if not bracketed:
        logger.warning("percolation threshold not bracketed by the grid")
    return OrderedDict(curve=rs, threshold=thr, bracketed=bracketed)


def _check_grid(grid):
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if len(grid) == 0 or np.any(np.diff(grid) < 0):
        raise DomainError("grid must be nonempty and sorted ascending")
    return grid


def percolation_scan(grid, side, param="rad", lam=1.0, rad=1.0, samples=10,
                     seed=0):
    """Largest-component fraction along a grid of lam or rad.

    Sample s at every grid point uses the stream ``percolation/s``, so a
    radius scan grows the same point set (common random numbers).

    Returns:
        (dict): ``curve`` (ResultSet param, mean_fraction, stderr),
            ``threshold`` (first 0.5 crossing, linearly interpolated) and
            ``bracketed``.

    """
    grid = _check_grid(grid)
    if param not in ("rad", "lam"):
        raise DomainError("scan parameter must be rad or lam")
    if samples < 1:
        raise DomainError("need at least one sample per grid point")
    fractions = list()
    for g in grid:
        fr = list()
        for s in range(samples):
            stream = streams.substream("percolation", s)
            net = sample_rgg(g if param == "lam" else lam, side,
                             g if param == "rad" else rad, seed=seed,
                             stream=stream)
            fr.append(largest_component_fraction(net))
        fractions.append(fr)
        logger.debug("percolation {}={:.6g}: {:.4f}".format(
            param, g, np.mean(fr)))
    return _curve(grid, fractions)


def site_percolation(net, grid, samples=10, seed=0):
    """Largest surviving component when nodes are kept with probability p.

    Sample s draws one uniform per node from the stream
    ``site/s`` and keeps the nodes below p, so the kept sets are nested
    along the grid.

    """
    grid = _check_grid(grid)
    if np.any(grid < 0) or np.any(grid > 1):
        raise DomainError("site probabilities must lie in [0, 1]")
    draws = [streams.generator(seed, streams.substream("site", s)).random(
        net.n) for s in range(samples)]
    fractions = [[largest_component_fraction(net, keep=u < p) for u in draws]
                 for p in grid]
    return _curve(grid, fractions)


class EpidemicModel(object):
    """Per-node mean-field SIS parameters.

    Args:
        beta (float): Transmission rate >= 0.
        mu (float): Recovery rate >= 0.
        dt (float): Euler step > 0.

    """

    def __init__(self, beta, mu, dt=0.1):
        if beta < 0 or mu < 0:
            raise DomainError("SIS rates must be nonnegative")
        if dt <= 0:
            raise StepSizeError("time step must be positive")
        self.beta = float(beta)
        self.mu = float(mu)
        self.dt = float(dt)

    def check_step(self, max_degree):
        if self.dt * (self.mu + self.beta * max_degree) > 1.0:
            raise StepSizeError(
                "dt (mu + beta max degree) = {:.6g} exceeds 1".format(
                    self.dt * (self.mu + self.beta * max_degree)))


def _adjacency(net):
    if isinstance(net, SpatialNetwork):
        return net.adjacency
    if sp.issparse(net):
        return sp.csr_matrix(net, dtype=np.float64)
    if isinstance(net, nx.Graph):
        return nx.to_scipy_sparse_array(net, nodelist=sorted(net.nodes),
                                        format="csr", dtype=np.float64)
    return sp.csr_matrix(np.asarray(net, dtype=np.float64))


def sis_simulate(net, model, s0, T):
    """Mean-field SIS iteration.

    s_v <- clip(s_v + dt [-mu s_v + beta (1 - s_v) sum_u A_vu s_u], 0, 1)

    Args:
        net: SpatialNetwork, networkx graph or adjacency matrix.
        model (EpidemicModel): Rates and step.
        s0 (array or float): Initial infection probabilities.
        T (int): Number of steps.

    Returns:
        (dict): ``I`` (mean infection, length T+1) and ``s`` (final
            per-node probabilities).

    """
    A = _adjacency(net)
    n = A.shape[0]
    if n == 0:
        raise DomainError("SIS on an empty network")
    maxdeg = float(np.max(np.asarray(A.sum(axis=1)).reshape(-1)))
    model.check_step(maxdeg)
    s = np.clip(np.broadcast_to(np.asarray(s0, dtype=np.float64), (n,)).copy(),
                0.0, 1.0)
    I = np.zeros(T + 1)
    I[0] = s.mean()
    for t in range(T):
        s = s + model.dt * (-model.mu * s + model.beta * (1.0 - s) * A.dot(s))
        np.clip(s, 0.0, 1.0, out=s)
        I[t + 1] = s.mean()
    return OrderedDict(I=I, s=s)


def spectral_radius(A, tol=1e-9, max_iter=100000):
    """Largest adjacency eigenvalue by power iteration on A + I.

    The shift keeps the dominant eigenvalue unique on bipartite graphs.

    """
    n = A.shape[0]
    if n == 0:
        raise DomainError("spectral radius of an empty network")
    x = np.ones(n) / np.sqrt(n)
    est = 0.0
    for it in range(max_iter):
        y = A.dot(x) + x
        nrm = float(np.linalg.norm(y))
        if nrm == 0:
            return 0.0
        x_new = y / nrm
        new = float(x_new.dot(A.dot(x_new) + x_new)) - 1.0
        if it > 0 and abs(new - est) <= tol * max(abs(new), 1.0):
            return max(new, 0.0)
        est = new
        x = x_new
    raise NonConvergenceError("power iteration did not converge", result=est,
                              residual=None)


def algebraic_connectivity(net):
    """Second-smallest Laplacian eigenvalue; exactly 0 when disconnected."""
    A = _adjacency(net)
    n = A.shape[0]
    if n < 2:
        return 0.0
    g = nx.from_scipy_sparse_array(A)
    if not nx.is_connected(g):
        return 0.0
    L = np.diag(np.asarray(A.sum(axis=1)).reshape(-1)) - A.toarray()
    vals = la.eigh(L, eigvals_only=True, subset_by_index=[0, 1])
    return float(vals[1])


def stability_indicators(net, beta, mu):
    """Spectral radius, algebraic connectivity, R0 and SIS verdict.

    Returns:
        (dict): ``rho``, ``lambda2``, ``mean_degree``, ``R0``
            (beta E[K] / mu) and ``verdict`` (subcritical iff beta/mu <
            1/rho).

    """
    if mu <= 0:
        raise DomainError("R0 needs mu > 0")
    A = _adjacency(net)
    if A.shape[0] == 0:
        raise DomainError("stability indicators of an empty network")
    rho = spectral_radius(A)
    deg = np.asarray(A.sum(axis=1)).reshape(-1)
    mean_deg = float(np.mean(deg))
    sub = rho == 0 or beta / mu < 1.0 / rho
    return OrderedDict(rho=rho, lambda2=algebraic_connectivity(A),
                       mean_degree=mean_deg, R0=beta * mean_deg / mu,
                       verdict="subcritical" if sub else "supercritical")
