# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Resilience metrics computed on performance trajectories.

All functions take a :class:`~resilkit.core.dynamics.Trajectory` (or a
bare performance series) and return plain numbers or dictionaries.  Time
windows ``[t_f, t_r]`` are inclusive on both ends.

"""

import logging
from collections import OrderedDict

import numpy as np

from .core.errors import DomainError
from .core.dynamics import Trajectory
from .core.resultset import ResultSet

logger = logging.getLogger(__name__)


class MetricsConfig(object):
    """Thresholds, weights and costs shared by the metric functions.

    Args:
        delta (float): Downtime fraction in (0, 1]; Q_t < delta*Q_max
            counts as down.
        q_sla (float, optional): Contractual performance floor.
        q_avail (float, optional): Availability floor.
        q_min (float, optional): Minimum acceptable performance for the
            risk-assessment downtime count.
        l_max (float, optional): Latency bound.
        weights (dict, optional): Metric name to weight for the composite
            index.  Weights are nonnegative and sum to one.
        cost (array or float, optional): Cost coefficients C_t >= 0.
        alpha (float): CVaR level in [0, 1).
        stabilization (int): Steps performance must stay at or above
            delta*Q_max for a recovery to count.

    """

    def __init__(self, delta=0.8, q_sla=None, q_avail=None, q_min=None,
                 l_max=None, weights=None, cost=None, alpha=0.95,
                 stabilization=3):
        self.delta = float(delta)
        self.q_sla = q_sla
        self.q_avail = q_avail
        self.q_min = q_min
        self.l_max = l_max
        self.weights = OrderedDict() if weights is None else \
            OrderedDict(weights)
        self.cost = cost
        self.alpha = float(alpha)
        self.stabilization = int(stabilization)

    def problems(self, q_max=None):
        """Return the list of invariant violations (empty when valid)."""
        errs = list()
        if not (0.0 < self.delta <= 1.0):
            errs.append("delta must lie in (0, 1], got {}".format(self.delta))
        for name in ("q_sla", "q_avail", "q_min"):
            val = getattr(self, name)
            if val is None:
                continue
            if val < 0:
                errs.append("{} must be >= 0, got {}".format(name, val))
            if q_max is not None and val > q_max:
                errs.append("{}={} exceeds q_max={}".format(name, val, q_max))
        if self.l_max is not None and self.l_max < 0:
            errs.append("l_max must be >= 0, got {}".format(self.l_max))
        if len(self.weights) > 0:
            w = np.array(list(self.weights.values()), dtype=float)
            if np.any(w < 0):
                errs.append("weights must be nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                errs.append("weights sum to {!r}, expected 1".format(w.sum()))
        if self.cost is not None and np.any(np.asarray(self.cost) < 0):
            errs.append("cost coefficients must be nonnegative")
        if not (0.0 <= self.alpha < 1.0):
            errs.append("alpha must lie in [0, 1), got {}".format(self.alpha))
        if self.stabilization < 1:
            errs.append("stabilization must be >= 1")
        return errs

    def check(self, q_max=None):
        errs = self.problems(q_max)
        if len(errs) > 0:
            raise DomainError("; ".join(errs))


class DisruptionEvents(object):
    """Ordered, non-overlapping disruption events (t_f, t_d, t_r)."""

    def __init__(self, events=()):
        self.events = [tuple(int(v) for v in ev) for ev in events]
        prev = None
        for k, (tf, td, tr) in enumerate(self.events):
            if not (tf <= td <= tr):
                raise DomainError(
                    "event {} violates t_f <= t_d <= t_r: {}".format(
                        k, (tf, td, tr)))
            if prev is not None and tf <= prev:
                raise DomainError(
                    "event {} starts at {} before the previous recovery "
                    "at {}".format(k, tf, prev))
            prev = tr

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, k):
        return self.events[k]

    def __repr__(self):
        return "DisruptionEvents({})".format(self.events)


def _series(traj):
    """Return (Q, q_max) for a Trajectory or a (Q, q_max) pair."""
    if isinstance(traj, Trajectory):
        return traj.Q, traj.q_max
    Q, q_max = traj
    return np.asarray(Q, dtype=np.float64), float(q_max)


def _window(Q, window):
    if window is None:
        return 0, len(Q) - 1
    t0, t1 = int(window[0]), int(window[1])
    if t1 < t0:
        raise DomainError("empty window [{}, {}]".format(t0, t1))
    if t0 < 0 or t1 >= len(Q):
        raise DomainError("window [{}, {}] outside trajectory 0..{}".format(
            t0, t1, len(Q) - 1))
    return t0, t1


def resilience_loss(traj, window=None):
    """Cumulative normalized shortfall over a window.

    L = sum_{t=t_f}^{t_r} (1 - Q_t/Q_max).

    Args:
        traj (Trajectory): The trajectory, or a (Q, q_max) pair.
        window (tuple): Inclusive (t_f, t_r).  None uses the full horizon.

    Returns:
        (float): L in [0, t_r - t_f + 1].

    """
    Q, q_max = _series(traj)
    if q_max <= 0:
        raise DomainError("q_max must be positive")
    t0, t1 = _window(Q, window)
    return float(np.sum(1.0 - Q[t0:t1 + 1] / q_max))


def detect_events(traj, delta=0.8, stabilization=3, detector=None,
                  onset_tol=1e-9):
    """Find disruption events in a performance trajectory.

    Onset is the first step below (1 - onset_tol)*Q_max after a normal
    step.  Detection is the first step at or after onset where
    ``detector(Q, t, q_max)`` fires (default: Q_t < delta*Q_max).
    Recovery is the first step at or after detection from which Q stays at
    or above delta*Q_max for ``stabilization`` steps.  An event that never
    recovers ends at the last step.

    Returns:
        (DisruptionEvents): The detected events.

    """
    Q, q_max = _series(traj)
    if detector is None:
        def detector(Q, t, q_max):
            return Q[t] < delta * q_max
    up = Q >= delta * q_max
    n = len(Q)
    events = list()
    t = 0
    while t < n:
        if Q[t] >= (1.0 - onset_tol) * q_max:
            t += 1
            continue
        tf = t
        td = None
        for s in range(tf, n):
            if detector(Q, s, q_max):
                td = s
                break
        if td is None:
            # Shallow dip, never detected.
            t += 1
            while t < n and Q[t] < (1.0 - onset_tol) * q_max:
                t += 1
            continue
        tr = n - 1
        for s in range(td, n):
            if np.all(up[s:s + stabilization]):
                tr = s
                break
        events.append((tf, td, tr))
        t = tr + 1
        while t < n and Q[t] < (1.0 - onset_tol) * q_max:
            t += 1
    logger.debug("detected {} disruption events".format(len(events)))
    return DisruptionEvents(events)


def event_table(traj, events, cfg):
    """Per-event table: downtime, detection and recovery times, drops, loss.
    """
    Q, q_max = _series(traj)
    rs = ResultSet(["event", "t_f", "t_d", "t_r", "downtime", "ttd", "ttr",
                    "max_drop", "residual", "loss"])
    for k, (tf, td, tr) in enumerate(events):
        _window(Q, (tf, tr))
        seg = Q[tf:tr + 1]
        rs.rows.append((
            k, tf, td, tr,
            int(np.sum(seg < cfg.delta * q_max)),
            td - tf,
            tr - td,
            float(np.max(q_max - seg)),
            float(q_max - Q[tr]),
            float(np.sum(1.0 - seg / q_max)),
        ))
    return rs


def temporal_metrics(traj, events, cfg):
    """Downtime, MTTF, MTTD, MTTR, maximum drop and residual deficit.

    Args:
        traj (Trajectory): The trajectory.
        events (DisruptionEvents): Events annotated on the trajectory.
        cfg (MetricsConfig): Supplies delta.

    Returns:
        (dict): ``downtime`` (list of D_k), ``MTTF`` (NaN with
            ``mttf_defined`` False when fewer than two events), ``MTTD``,
            ``MTTR``, ``M`` (largest drop over all event windows), ``D``
            (deficit at the last recovery) and ``events`` (per-event table).

    """
    Q, q_max = _series(traj)
    table = event_table((Q, q_max), events, cfg)
    out = OrderedDict()
    out["n_events"] = len(events)
    out["downtime"] = [int(v) for v in table["downtime"]]
    if len(events) > 0:
        out["MTTD"] = float(np.mean(table["ttd"]))
        out["MTTR"] = float(np.mean(table["ttr"]))
        out["M"] = float(np.max(table["max_drop"]))
        out["D"] = float(table["residual"][-1])
    else:
        out["MTTD"] = 0.0
        out["MTTR"] = 0.0
        out["M"] = 0.0
        out["D"] = 0.0
    if len(events) >= 2:
        gaps = [events[k + 1][0] - events[k][2]
                for k in range(len(events) - 1)]
        out["MTTF"] = float(np.mean(gaps))
        out["mttf_defined"] = True
    else:
        logger.warning("MTTF undefined with {} events".format(len(events)))
        out["MTTF"] = float("nan")
        out["mttf_defined"] = False
    out["events"] = table
    return out


def _fraction(flags):
    flags = np.asarray(flags, dtype=bool)
    if len(flags) == 0:
        raise DomainError("empty series")
    return float(np.count_nonzero(flags)) / len(flags)


def slice_isolation(trajs, disrupted, window=None):
    """Slice isolation index of slice ``disrupted`` against the others.

    Returns:
        (tuple): (SII, single_slice flag).  A single slice gives (1, True).

    """
    series = [_series(tr) for tr in trajs]
    n = len(series)
    if n < 1:
        raise DomainError("need at least one slice")
    if not (0 <= disrupted < n):
        raise DomainError("disrupted slice {} out of range".format(disrupted))
    if n == 1:
        logger.warning("slice isolation with a single slice is reported as 1")
        return 1.0, True
    spill = 0.0
    for j, (Q, q_max) in enumerate(series):
        if j == disrupted:
            continue
        t0, t1 = _window(Q, window)
        spill += np.max(1.0 - Q[t0:t1 + 1] / q_max)
    return float(1.0 - spill / (n - 1)), False


def service_metrics(trajs, latency, cfg, disrupted=0, window=None):
    """Slice isolation, latency compliance, SLA violation and availability.

    Args:
        trajs (list): Per-slice trajectories sharing one horizon.
        latency (array, optional): Latency series L_t of the disrupted slice.
        cfg (MetricsConfig): Supplies l_max, q_sla and q_avail.
        disrupted (int): Index of the disrupted slice.
        window (tuple, optional): Window for the isolation index.

    Returns:
        (dict): SII, Lambda, V_SLA, A and the single_slice flag.  Metrics
            whose threshold is not configured are omitted.

    """
    series = [_series(tr) for tr in trajs]
    lengths = set(len(Q) for Q, _ in series)
    if latency is not None:
        lengths.add(len(latency))
    if len(lengths) > 1:
        raise DomainError("slice series do not share a horizon")
    out = OrderedDict()
    out["SII"], out["single_slice"] = slice_isolation(series, disrupted,
                                                      window=window)
    Q, q_max = series[disrupted]
    if latency is not None and cfg.l_max is not None:
        out["Lambda"] = _fraction(np.asarray(latency) <= cfg.l_max)
    if cfg.q_sla is not None:
        out["V_SLA"] = _fraction(Q < cfg.q_sla)
    if cfg.q_avail is not None:
        out["A"] = _fraction(Q >= cfg.q_avail)
    return out


def autoscaling_efficiency(allocated, optimal, window=None):
    """eta = 1 - sum|R_t - R*_t| / sum R*_t over the window.

    The value may be negative when over-provisioning exceeds demand.

    """
    R = np.asarray(allocated, dtype=np.float64)
    Rs = np.asarray(optimal, dtype=np.float64)
    if R.shape != Rs.shape:
        raise DomainError("allocated and optimal series differ in length")
    t0, t1 = _window(Rs, window)
    denom = np.sum(Rs[t0:t1 + 1])
    if denom == 0:
        raise DomainError("optimal allocation sums to zero over the window")
    return float(1.0 - np.sum(np.abs(R[t0:t1 + 1] - Rs[t0:t1 + 1])) / denom)


def composite_index(values, weights):
    """Weighted combination sum_i w_i M_i.

    Args:
        values (dict or list): Normalized metrics.
        weights (dict or list): Matching weights.

    """
    if isinstance(values, dict) and isinstance(weights, dict):
        missing = [k for k in weights if k not in values]
        if len(missing) > 0:
            raise DomainError("no value for weighted metrics {}".format(
                missing))
        if len(weights) != len(values):
            raise DomainError("{} weights for {} metrics".format(
                len(weights), len(values)))
        return float(sum(weights[k] * values[k] for k in weights))
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if values.shape != weights.shape:
        raise DomainError("{} weights for {} metrics".format(
            weights.size, values.size))
    return float(np.dot(weights, values))


def cost_resilience(traj, cost, window=None):
    """C = sum C_t (1 - Q_t/Q_max) over the window.

    Args:
        traj: Trajectory or (Q, q_max) pair.
        cost (float or array): Cost coefficients, a constant or one per
            step of the full trajectory.

    """
    Q, q_max = _series(traj)
    t0, t1 = _window(Q, window)
    C = np.broadcast_to(np.asarray(cost, dtype=np.float64), Q.shape)
    if np.any(C < 0):
        raise DomainError("cost coefficients must be nonnegative")
    return float(np.sum(C[t0:t1 + 1] * (1.0 - Q[t0:t1 + 1] / q_max)))


def aggregate_metrics(values, cfg, traj=None, window=None):
    """Composite index and cost-aware resilience.

    Args:
        values (dict): Normalized metrics keyed by name.
        cfg (MetricsConfig): Supplies the weights and cost series.
        traj: Trajectory for the cost-aware term (optional).
        window (tuple): Window for the cost-aware term.

    Returns:
        (dict): R_composite and, when a trajectory and cost are given,
            C_resilience.

    """
    out = OrderedDict()
    if len(cfg.weights) > 0:
        sel = OrderedDict((k, values[k]) for k in cfg.weights if k in values)
        if len(sel) != len(cfg.weights):
            raise DomainError("weights name metrics not computed: {}".format(
                [k for k in cfg.weights if k not in values]))
        out["R_composite"] = composite_index(sel, cfg.weights)
    if traj is not None and cfg.cost is not None:
        out["C_resilience"] = cost_resilience(traj, cfg.cost, window=window)
    return out


def metrics_report(traj, cfg, events=None, window=None, slices=None,
                   latency=None, disrupted=0, allocated=None, optimal=None,
                   normalized=None):
    """Compute the full metric suite for one trajectory.

    Args:
        traj (Trajectory): The primary (disrupted) trajectory.
        cfg (MetricsConfig): Configuration.
        events (DisruptionEvents, optional): Events; detected when None.
        window (tuple, optional): Loss window; defaults to the span of the
            events, or the full horizon without events.
        slices (list, optional): All slice trajectories, ``traj`` included
            at index ``disrupted``.
        latency (array, optional): Latency series.
        allocated, optimal (array, optional): Resource series for the
            auto-scaling efficiency.
        normalized (dict, optional): Extra normalized metrics for the
            composite index.

    Returns:
        (tuple): (summary ResultSet with columns metric,value; per-event
            ResultSet; dict of flags).

    """
    Q, q_max = _series(traj)
    cfg.check(q_max)
    if events is None:
        events = detect_events((Q, q_max), delta=cfg.delta,
                               stabilization=cfg.stabilization)
    if window is None:
        if len(events) > 0:
            window = (events[0][0], events[-1][2])
        else:
            window = (0, len(Q) - 1)
    vals = OrderedDict()
    vals["L"] = resilience_loss((Q, q_max), window)
    tm = temporal_metrics((Q, q_max), events, cfg)
    flags = OrderedDict(mttf_defined=tm["mttf_defined"],
                        n_events=tm["n_events"])
    vals["downtime"] = float(sum(tm["downtime"]))
    for k in ("M", "D", "MTTD", "MTTR"):
        vals[k] = tm[k]
    if tm["mttf_defined"]:
        vals["MTTF"] = tm["MTTF"]
    if slices is None:
        slices = [(Q, q_max)]
    sm = service_metrics(slices, latency, cfg, disrupted=disrupted,
                         window=window)
    flags["single_slice"] = sm.pop("single_slice")
    vals.update(sm)
    if allocated is not None and optimal is not None:
        vals["eta_scale"] = autoscaling_efficiency(allocated, optimal, window)
    if normalized is not None:
        vals.update(normalized)
    vals.update(aggregate_metrics(vals, cfg, traj=(Q, q_max), window=window))
    summary = ResultSet(["metric", "value"])
    for k, v in vals.items():
        summary.rows.append((k, float(v)))
    return summary, tm["events"], flags
