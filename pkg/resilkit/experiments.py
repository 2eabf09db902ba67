# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Experiment runner.

Every experiment kind has a *prepare* step that turns the scenario blocks
into module objects and a *run* step that drives them and fills a
:class:`~resilkit.report.RunReport`.  Validation is the prepare step with
error collection: every block is built, every failure is recorded with
the name of its field, and one ValidationError carries them all.

"""

import time
import numbers
import logging
import datetime
from collections import OrderedDict

import numpy as np

from . import __version__
from .core.errors import (ResilError, DomainError, ValidationError,
                          ExperimentError)
from .core.scenario import ScenarioFile, DEFAULTS, STOCHASTIC_KINDS, _merge
from .core.resultset import ResultSet
from .core.dynamics import (HybridState, Trajectory, DisturbanceProcess,
                            ConstantPolicy, SequencePolicy, LinearFeedback,
                            TabularPolicy, as_policy, rollout)
from .core.models import build_model
from .core import streams
from .metrics import MetricsConfig, DisruptionEvents, metrics_report
from .controllers import (LQFallbackSpec, fallback_decision,
                          scalar_switch_threshold, lq_fallback_bruteforce,
                          MTDState, mtd_plan_horizon, QuadraticCost,
                          ShortfallCost, closed_loop)
from .games import (StochasticGame, build_slice_migration_game,
                    shapley_value_iteration, worst_case_attacker,
                    deviation_gains, induced_mdp, value_iteration,
                    StepSchedule, q_learning)
from .games.shapley import _policy_table
from .pra import (DigitalTwin, Scenario, ScenarioSet, Embedding, assess,
                  strategic_pipeline)
from .riskgraph import (ENUMERATION_LIMIT, load_riskgraph, mocus_cut_sets,
                        systemic_risk, exact_risk, rank_mitigations,
                        derivative_importance)
from .report import RunReport
from .nettheory import (sample_rgg, degree_stats, largest_component_fraction,
                        percolation_scan, site_percolation, EpidemicModel,
                        sis_simulate, stability_indicators)

logger = logging.getLogger(__name__)

policy_kinds = ("constant", "sequence", "linear", "table")

_scenario_keys = ("name", "p", "attack", "x0", "q0", "natural", "mode_rules")

_caught = (ResilError, ValueError, TypeError, KeyError, IndexError)


# Block builders


def build_policy(block):
    """Policy from a scenario block.

    None gives the zero action, a number a constant and a list a fixed
    path.  A dictionary selects a policy ``kind``: ``constant`` (value),
    ``sequence`` (values), ``linear`` (gain, low, high) or ``table``
    (table, key, default).

    """
    if not isinstance(block, dict):
        return as_policy(block)
    kind = block.get("kind", "constant")
    if kind == "constant":
        return ConstantPolicy(block["value"])
    if kind == "sequence":
        return SequencePolicy(block["values"])
    if kind == "linear":
        return LinearFeedback(block["gain"], low=block.get("low"),
                              high=block.get("high"))
    if kind == "table":
        return TabularPolicy(block["table"], key=block.get("key", "q"),
                             default=block.get("default"))
    raise DomainError("unknown policy kind {!r}; expected one of {}".format(
        kind, list(policy_kinds)))


def build_disturbances(attack, natural, seed, stream="natural"):
    if isinstance(attack, dict):
        attack = build_policy(attack)
    return DisturbanceProcess(attack=attack, natural=natural,
                              seed=0 if seed is None else seed, stream=stream)


def initial_state(model, x0, q0=None):
    """Initial HybridState, broadcasting a scalar x0 to the model dimension.
    """
    q0 = model.modes[0] if q0 is None else q0
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 0 and model.dim > 1:
        x0 = np.full(model.dim, float(x0))
    s0 = HybridState(x0, q0)
    model.check_state(s0)
    return s0


def build_metrics_config(block, q_max=None):
    cfg = MetricsConfig(**dict(block))
    errs = cfg.problems(q_max)
    if len(errs) > 0:
        raise ValidationError(errs)
    return cfg


def build_game(block):
    """A StochasticGame from an explicit table or a ``builder`` block."""
    block = dict(block)
    builder = block.pop("builder", None)
    if builder is None:
        return StochasticGame.from_dict(block)
    if builder != "slice_migration":
        raise DomainError("unknown game builder {!r}".format(builder))
    return build_slice_migration_game(**block)


def build_embedding(block):
    return Embedding(block["states"], block["defender"], block["attacker"],
                     key=block.get("key", "bucket"),
                     clip=block.get("clip", False))


def build_scenarios(blocks, model, T, window=None, q_min=0.0):
    """ScenarioSet from a list of scenario blocks, all errors collected."""
    if not isinstance(blocks, list) or len(blocks) == 0:
        raise DomainError("must be a nonempty list")
    errs = list()
    scs = list()
    names = set()
    for i, b in enumerate(blocks):
        field = "[{}]".format(i)
        if not isinstance(b, dict):
            errs.append("{}: must be a mapping".format(field))
            continue
        for k in b:
            if k not in _scenario_keys:
                errs.append("{}.{}: unknown key".format(field, k))
        if "p" not in b:
            errs.append("{}.p: required".format(field))
        name = str(b.get("name", "s{}".format(i)))
        if name in names:
            errs.append("{}.name: duplicate scenario {!r}".format(field, name))
        names.add(name)
        attack = b.get("attack")
        if isinstance(attack, dict):
            attack = _attempt(errs, field + ".attack", build_policy, attack)
        s0 = _attempt(errs, field + ".x0", initial_state, model,
                      b.get("x0", 0.0), b.get("q0"))
        if s0 is None:
            continue
        sc = _attempt(errs, field, Scenario, name, b.get("p", 0.0),
                      attack=attack, x0=s0.x, q0=s0.q,
                      natural=b.get("natural"), mode_rules=b.get("mode_rules"))
        if sc is None:
            continue
        _attempt(errs, field + ".natural", DisturbanceProcess,
                 natural=sc.natural)
        _attempt(errs, field + ".mode_rules", sc.model_for, model)
        scs.append(sc)
    if len(errs) > 0:
        raise ValidationError(errs)
    try:
        return ScenarioSet(scs, T, window=window, q_min=q_min)
    except DomainError as e:
        raise ValidationError(str(e).split("; "))


# Validation helpers


def _message(e):
    if isinstance(e, KeyError):
        return "missing entry {}".format(e.args[0] if e.args else "")
    return str(e)


def _attempt(errs, field, func, *args, **kwargs):
    """Call func, recording any failure under ``field``."""
    try:
        return func(*args, **kwargs)
    except ValidationError as e:
        errs.extend("{}: {}".format(field, m) for m in e.errors)
    except _caught as e:
        errs.append("{}: {}".format(field, _message(e)))
    return None


def _block(errs, d, key, func, *args, **kwargs):
    # A missing required block is already reported by ScenarioFile.problems.
    if d.get(key) is None:
        return None
    return _attempt(errs, key, func, d[key], *args, **kwargs)


def _integer(errs, field, value, low=None, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if value is not None:
            errs.append("{}: must be an integer, got {!r}".format(
                field, value))
        return None
    if low is not None and value < low:
        errs.append("{}: must be >= {}, got {}".format(field, low, value))
        return None
    return int(value)


def _number(errs, field, value, check=None, expect=None, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        errs.append("{}: must be a number, got {!r}".format(field, value))
        return None
    if check is not None and not check(value):
        errs.append("{}: must be {}, got {}".format(field, expect, value))
        return None
    return float(value)


def _choice(errs, field, value, options):
    if value not in options:
        errs.append("{}: {!r} is not one of {}".format(
            field, value, list(options)))
        return None
    return value


def _window(errs, value, T):
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        errs.append("window: must be a pair [t_f, t_r]")
        return None
    t0, t1 = value
    if T is not None and not (0 <= t0 <= t1 <= T):
        errs.append("window: [{}, {}] outside 0..{}".format(t0, t1, T))
        return None
    return (int(t0), int(t1))


def _check_horizon(errs, dist, T):
    spans = dist.horizon()
    for key in ("attack", "natural"):
        if spans[key] is not None and spans[key] < T:
            errs.append("{}: path of length {} is shorter than T={}".format(
                key, spans[key], T))


def _random_natural(natural):
    return isinstance(natural, dict) and \
        natural.get("kind", "zero") not in ("zero", "fixed")


def _needs_seed(kind, d):
    if kind in STOCHASTIC_KINDS:
        return True
    if kind in ("rollout", "mpc"):
        return _random_natural(d.get("natural"))
    if kind == "metrics":
        tb = d.get("trajectory")
        return isinstance(tb, dict) and _random_natural(tb.get("natural"))
    if kind == "game":
        return d.get("q_learning") is not None
    return False


def _prefixed(errs, prefix, sub):
    errs.extend("{}.{}".format(prefix, m) for m in sub)


def _fmt_vec(v):
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    return " ".join("{:.12g}".format(a) for a in arr)


def _timeseries(traj, cfg=None):
    """Plot-ready series t, Q and the thresholds that are set."""
    cfg = MetricsConfig() if cfg is None else cfg
    keys = ["t", "Q", "q_max", "delta_threshold"]
    extra = [k for k in ("q_sla", "q_avail", "q_min")
             if getattr(cfg, k) is not None]
    rs = ResultSet(keys + extra)
    for t in range(len(traj)):
        rs.rows.append(tuple([t, float(traj.Q[t]), traj.q_max,
                              cfg.delta * traj.q_max] +
                             [float(getattr(cfg, k)) for k in extra]))
    return rs


# rollout


def _prepare_rollout(d, seed, errs):
    obj = OrderedDict()
    obj["model"] = _block(errs, d, "model", build_model)
    obj["defender"] = _attempt(errs, "defender", build_policy,
                               d.get("defender"))
    obj["disturbances"] = _attempt(errs, "natural", build_disturbances,
                                   d["attack"], d["natural"], seed)
    obj["T"] = _integer(errs, "T", d["T"], low=1)
    obj["metrics"] = None
    if obj["model"] is not None:
        obj["s0"] = _attempt(errs, "x0", initial_state, obj["model"],
                             d["x0"], d["q0"])
        if d.get("metrics") is not None:
            obj["metrics"] = _attempt(errs, "metrics", build_metrics_config,
                                      d["metrics"], obj["model"].q_max)
    if obj["disturbances"] is not None and obj["T"] is not None:
        _check_horizon(errs, obj["disturbances"], obj["T"])
    return obj


def _add_metrics(report, traj, cfg, **kwargs):
    summary, events, flags = metrics_report(traj, cfg, **kwargs)
    report.add_table("metrics", summary)
    report.add_table("events", events)
    report.values.update(flags)


def _run_rollout(obj, d, seed, report):
    traj = rollout(obj["model"], obj["defender"], None, obj["disturbances"],
                   obj["s0"], obj["T"])
    report.values["model"] = obj["model"].name
    report.add_table("trajectory", traj.to_resultset())
    report.add_table("timeseries", _timeseries(traj, obj["metrics"]))
    if obj["metrics"] is not None:
        _add_metrics(report, traj, obj["metrics"])
    return traj


# metrics


def _slice_series(block):
    return (np.asarray(block["Q"], dtype=np.float64), float(block["q_max"]))


def _prepare_metrics(d, seed, errs):
    obj = OrderedDict(rollout=None, trajectory=None)
    tb = d.get("trajectory")
    q_max = None
    T = None
    if isinstance(tb, dict) and "model" in tb:
        sub = list()
        rd = _merge(DEFAULTS["rollout"], tb)
        for k in rd:
            if k not in DEFAULTS["rollout"]:
                sub.append("{}: unknown key".format(k))
        if rd.get("model") is None or rd.get("T") is None:
            sub.append("model and T are required for a simulated trajectory")
        else:
            obj["rollout"] = _prepare_rollout(rd, seed, sub)
            if obj["rollout"]["model"] is not None:
                q_max = obj["rollout"]["model"].q_max
            T = obj["rollout"]["T"]
        _prefixed(errs, "trajectory", sub)
    elif tb is not None:
        obj["trajectory"] = _attempt(
            errs, "trajectory", lambda b: Trajectory.from_performance(
                b["Q"], b["q_max"], modes=b.get("modes")), tb)
        if obj["trajectory"] is not None:
            q_max = obj["trajectory"].q_max
            T = obj["trajectory"].T
    obj["config"] = _attempt(errs, "config", build_metrics_config,
                             d["config"], q_max)
    obj["events"] = None
    if d.get("events") is not None:
        obj["events"] = _attempt(errs, "events", DisruptionEvents,
                                 d["events"])
        if obj["events"] is not None and T is not None:
            for k, ev in enumerate(obj["events"]):
                if ev[2] > T:
                    errs.append("events[{}]: recovery at {} after the last "
                                "record {}".format(k, ev[2], T))
    obj["window"] = _window(errs, d.get("window"), T)
    obj["slices"] = None
    if d.get("slices") is not None:
        slices = d["slices"]
        if not isinstance(slices, list) or len(slices) == 0:
            errs.append("slices: must be a nonempty list")
        else:
            obj["slices"] = [
                _attempt(errs, "slices[{}]".format(i), _slice_series, s)
                for i, s in enumerate(slices)]
            disrupted = _integer(errs, "disrupted", d["disrupted"], low=0)
            if disrupted is not None and disrupted >= len(slices):
                errs.append("disrupted: slice {} out of range 0..{}".format(
                    disrupted, len(slices) - 1))
    for key in ("latency", "allocated", "optimal"):
        if d.get(key) is not None:
            obj[key] = _attempt(errs, key, np.asarray, d[key],
                                dtype=np.float64)
        else:
            obj[key] = None
    if (obj["allocated"] is None) != (obj["optimal"] is None):
        errs.append("allocated: allocated and optimal must be given together")
    if obj["latency"] is not None and obj["config"] is not None and \
            obj["config"].l_max is None:
        errs.append("config.l_max: required when a latency series is given")
    obj["normalized"] = d.get("normalized")
    return obj


def _run_metrics(obj, d, seed, report):
    if obj["rollout"] is not None:
        r = obj["rollout"]
        traj = rollout(r["model"], r["defender"], None, r["disturbances"],
                       r["s0"], r["T"])
        report.add_table("trajectory", traj.to_resultset())
    else:
        traj = obj["trajectory"]
    cfg = obj["config"]
    report.add_table("timeseries", _timeseries(traj, cfg))
    _add_metrics(report, traj, cfg, events=obj["events"],
                 window=obj["window"], slices=obj["slices"],
                 latency=obj["latency"], disrupted=d["disrupted"],
                 allocated=obj["allocated"], optimal=obj["optimal"],
                 normalized=obj["normalized"])


# fallback


def build_fallback_spec(block):
    """Full matrices, or the scalar shorthand with keys a0, a1, ..."""
    block = dict(block)
    if "a0" in block:
        return LQFallbackSpec.scalar(**block)
    return LQFallbackSpec(**block)


def _prepare_fallback(d, seed, errs):
    obj = OrderedDict()
    spec = _block(errs, d, "spec", build_fallback_spec)
    obj["spec"] = spec
    states = d.get("states")
    obj["states"] = list()
    if states is not None:
        if not isinstance(states, list) or len(states) == 0:
            errs.append("states: must be a nonempty list")
        else:
            for i, x in enumerate(states):
                xa = _attempt(errs, "states[{}]".format(i), np.asarray, x,
                              dtype=np.float64)
                if xa is None:
                    continue
                xa = xa.reshape(-1)
                if spec is not None and len(xa) != spec.n:
                    errs.append("states[{}]: dimension {} but spec has "
                                "{}".format(i, len(xa), spec.n))
                obj["states"].append(xa)
    obj["oracle"] = bool(d["oracle"])
    obj["step"] = _number(errs, "oracle_step", d["oracle_step"],
                          check=lambda v: v > 0, expect="positive")
    if obj["oracle"] and spec is not None and spec.B.shape[1] != 1:
        errs.append("oracle: the grid oracle supports a single input only")
    return obj


def _run_fallback(obj, d, seed, report):
    spec = obj["spec"]
    keys = ["state", "x", "switch", "lhs", "rhs", "J_stay", "J_fallback",
            "margin", "u_stay", "u_fallback"]
    if obj["oracle"]:
        keys += ["oracle_J_stay", "oracle_J_fallback", "oracle_switch",
                 "agree"]
    rs = ResultSet(keys)
    agree = True
    for k, x in enumerate(obj["states"]):
        dec = fallback_decision(spec, x)
        row = [k, _fmt_vec(x), dec["switch"], dec["lhs"], dec["rhs"],
               dec["J"][0], dec["J"][1], dec["margin"], _fmt_vec(dec["u"][0]),
               _fmt_vec(dec["u"][1])]
        if obj["oracle"]:
            bf = lq_fallback_bruteforce(spec, x, step=obj["step"])
            ok = bf["switch"] == dec["switch"]
            agree = agree and ok
            row += [bf["J"][0], bf["J"][1], bf["switch"], ok]
        rs.rows.append(tuple(row))
    report.add_table("decisions", rs)
    report.values["n_switch"] = int(sum(1 for r in rs.rows if r[2]))
    if obj["oracle"]:
        report.values["oracle_agrees"] = agree
    if spec.is_scalar:
        rule = scalar_switch_threshold(spec)
        report.values["threshold"] = rule.threshold
        report.values["switch_below"] = rule.below


# mtd


def _prepare_mtd(d, seed, errs):
    obj = OrderedDict()
    configs = d.get("configs")
    if configs is not None and (not isinstance(configs, list) or
                                len(configs) == 0):
        errs.append("configs: must be a nonempty list")
        configs = None
    f0 = d.get("f0")
    if f0 is None and configs is not None:
        f0 = np.full(len(configs), 1.0 / len(configs))
    obj["H"] = _integer(errs, "H", d["H"], low=1)
    if configs is None or d.get("risk") is None:
        obj["state"] = None
        return obj
    if isinstance(d["risk"], dict) and d.get("surface") is None:
        errs.append("surface: required when risk is given per surface")
    obj["state"] = _attempt(
        errs, "configs", MTDState, configs, f0, d["risk"], d["eps"],
        alpha=d["alpha"], features=d.get("features"), duals=d.get("duals"),
        surface=d.get("surface"), transition=d.get("transition"),
        psi=d.get("psi"))
    if obj["state"] is not None:
        _attempt(errs, "risk", obj["state"].risk_at, obj["state"].surface)
    return obj


def _run_mtd(obj, d, seed, report):
    state = obj["state"]
    res = mtd_plan_horizon(state, obj["H"])
    rs = ResultSet(["stage", "config", "probability"])
    for k, f in enumerate([state.f] + list(res["distributions"])):
        for c, p in zip(state.configs, f):
            rs.rows.append((k, c, float(p)))
    report.add_table("distributions", rs)
    report.add_table("stages", res["stages"])
    report.values["objective"] = res["objective"]
    report.values["configs"] = list(state.configs)


# mpc


def build_stage_cost(block, model):
    """QuadraticCost (default) or ShortfallCost from a ``cost`` block."""
    block = dict() if block is None else dict(block)
    kind = block.pop("kind", "quadratic")
    if kind == "quadratic":
        return QuadraticCost(**block)
    if kind == "shortfall":
        return ShortfallCost(model, **block)
    raise DomainError("unknown stage cost {!r}".format(kind))


def _prepare_mpc(d, seed, errs):
    obj = _prepare_rollout(d, seed, errs)
    obj["cost"] = None
    if obj["model"] is not None:
        obj["cost"] = _attempt(errs, "cost", build_stage_cost, d["cost"],
                               obj["model"])
    acts = d.get("actions")
    if acts is not None and (not isinstance(acts, list) or len(acts) == 0):
        errs.append("actions: must be a nonempty list")
    obj["actions"] = acts
    obj["H"] = _integer(errs, "H", d["H"], low=1)
    obj["n_samples"] = _integer(errs, "n_samples", d["n_samples"], low=1)
    obj["objective"] = _choice(errs, "objective", d["objective"],
                               ("expectation", "cvar"))
    obj["alpha"] = _number(errs, "alpha", d["alpha"],
                           check=lambda v: 0.0 <= v < 1.0, expect="in [0, 1)")
    return obj


def _run_mpc(obj, d, seed, report):
    traj, values = closed_loop(
        obj["model"], obj["s0"], obj["T"], obj["actions"], obj["cost"],
        obj["H"], disturbances=obj["disturbances"],
        n_samples=obj["n_samples"], objective=obj["objective"],
        alpha=obj["alpha"])
    report.values["model"] = obj["model"].name
    report.add_table("trajectory", traj.to_resultset())
    report.add_table("timeseries", _timeseries(traj, obj["metrics"]))
    plan = ResultSet(["t", "action", "value"])
    for t, v in enumerate(values):
        u = traj.u[t]
        plan.rows.append((t, u if isinstance(u, str) else _fmt_vec(u),
                          float(v)))
    report.add_table("plan", plan)
    report.values["total_cost"] = float(sum(
        obj["cost"](traj.x[t], traj.u[t], traj.q[t])
        for t in range(traj.T)))
    if obj["metrics"] is not None:
        _add_metrics(report, traj, obj["metrics"])


# game


def _prepare_game(d, seed, errs):
    obj = OrderedDict()
    obj["game"] = _block(errs, d, "game", build_game)
    obj["tol"] = _number(errs, "tol", d["tol"], check=lambda v: v > 0,
                         expect="positive")
    obj["max_iter"] = _integer(errs, "max_iter", d["max_iter"], low=1)
    obj["defender_policy"] = d.get("defender_policy")
    if obj["game"] is not None and obj["defender_policy"] is not None:
        _attempt(errs, "defender_policy", _policy_table, obj["game"],
                 obj["defender_policy"], "defender")
    ql = d.get("q_learning")
    obj["q_learning"] = None
    if ql is not None:
        if not isinstance(ql, dict):
            errs.append("q_learning: must be a mapping")
        else:
            ql = dict(ql)
            sched = _attempt(errs, "q_learning.schedule", StepSchedule,
                             **dict(ql.pop("schedule", None) or {}))
            sub = list()
            opts = OrderedDict(
                episodes=_integer(sub, "episodes", ql.pop("episodes", 200),
                                  low=1),
                steps=_integer(sub, "steps", ql.pop("steps", 50), low=1),
                epsilon=_number(sub, "epsilon", ql.pop("epsilon", 0.2),
                                check=lambda v: 0.0 <= v <= 1.0,
                                expect="in [0, 1]"),
                q0=_number(sub, "q0", ql.pop("q0", 0.0)),
                start=ql.pop("start", None))
            for k in ql:
                sub.append("{}: unknown key".format(k))
            if obj["game"] is not None and opts["start"] is not None and \
                    str(opts["start"]) not in obj["game"].states:
                sub.append("start: unknown state {!r}".format(opts["start"]))
            _prefixed(errs, "q_learning", sub)
            opts["schedule"] = sched
            obj["q_learning"] = opts
    return obj


def _run_game(obj, d, seed, report):
    game = obj["game"]
    sol = shapley_value_iteration(game, tol=obj["tol"],
                                  max_iter=obj["max_iter"])
    report.add_table("equilibrium", sol.to_resultset())
    report.add_table("convergence", ResultSet(
        ["iteration", "residual"],
        [(k + 1, r) for k, r in enumerate(sol.history)]))
    gains = deviation_gains(sol)
    report.values["n_states"] = game.n_states
    report.values["beta"] = game.beta
    report.values["iterations"] = sol.iterations
    report.values["residual"] = sol.residual
    report.values["defender_deviation_gain"] = gains["defender"]
    report.values["attacker_deviation_gain"] = gains["attacker"]
    if game.meta:
        report.values["game"] = game.meta

    if d["worst_case"]:
        pi = sol.defender if obj["defender_policy"] is None \
            else obj["defender_policy"]
        wc = worst_case_attacker(game, pi, tol=min(obj["tol"], 1e-10),
                                 max_iter=obj["max_iter"])
        rs = ResultSet(["state", "attacker_action", "value", "defender_loss"])
        for i, s in enumerate(game.states):
            rs.rows.append((s, wc["actions"][i], float(wc["values"][i]),
                            float(wc["loss"][i])))
        report.add_table("worst_case", rs)
        report.values["worst_case_max_loss"] = float(np.max(wc["loss"]))
        if obj["defender_policy"] is None:
            report.values["robust_gap"] = float(np.max(np.abs(
                wc["values"] - sol.values)))

    opts = obj["q_learning"]
    if opts is not None:
        mdp = induced_mdp(game, sol.attacker)
        vi = value_iteration(mdp)
        ql = q_learning(mdp, episodes=opts["episodes"], steps=opts["steps"],
                        schedule=opts["schedule"], epsilon=opts["epsilon"],
                        seed=seed, q0=opts["q0"], start=opts["start"])
        rs = ResultSet(["state", "greedy_action", "optimal_action", "q_value",
                        "optimal_value", "visits"])
        agree = 0
        for i, s in enumerate(mdp.states):
            opt = mdp.actions[i][vi["policy"][i]]
            agree += int(opt == ql["actions"][i])
            rs.rows.append((s, ql["actions"][i], opt,
                            float(np.max(ql["Q"][i])),
                            float(vi["values"][i]),
                            int(np.sum(ql["visits"][i]))))
        report.add_table("q_learning", rs)
        report.values["q_policy_agreement"] = agree / float(mdp.n_states)


# pra


def _prepare_pra(d, seed, errs):
    obj = OrderedDict()
    model = _block(errs, d, "model", build_model)
    twin = model
    if d.get("twin") is not None:
        twin = _attempt(errs, "twin", build_model, d["twin"])
    obj["model"] = model
    obj["twin"] = None
    if model is not None and twin is not None:
        obj["twin"] = _attempt(errs, "twin", DigitalTwin, twin, real=model)
    obj["defender"] = _attempt(errs, "defender", build_policy, d["defender"])
    T = _integer(errs, "T", d["T"], low=1)
    obj["N"] = _integer(errs, "N", d["N"], low=1)
    obj["alpha"] = _number(errs, "alpha", d["alpha"],
                           check=lambda v: 0.0 <= v < 1.0, expect="in [0, 1)")
    q_min = _number(errs, "q_min", d["q_min"], check=lambda v: v >= 0,
                    expect="nonnegative")
    window = _window(errs, d.get("window"), T)
    obj["scenarios"] = None
    if twin is not None and T is not None and q_min is not None and \
            d.get("scenarios") is not None:
        obj["scenarios"] = _attempt(errs, "scenarios", build_scenarios,
                                    d["scenarios"], twin, T, window=window,
                                    q_min=q_min)
    fid = d.get("fidelity")
    obj["fidelity"] = None
    if fid is not None:
        fid = dict(fid)
        names = [sc.name for sc in obj["scenarios"]] \
            if obj["scenarios"] is not None else None
        name = fid.get("scenario")
        if names is not None:
            if name is None:
                name = names[0]
            elif name not in names:
                errs.append("fidelity.scenario: unknown scenario {!r}".format(
                    name))
        e_max = _number(errs, "fidelity.e_max", fid.get("e_max"),
                        check=lambda v: v > 0, expect="positive",
                        optional=True)
        obj["fidelity"] = OrderedDict(scenario=name, e_max=e_max)
    return obj


def _run_fidelity(obj, seed, report):
    fid = obj["fidelity"]
    sc = [s for s in obj["scenarios"] if s.name == fid["scenario"]][0]
    twin = obj["twin"]
    s0 = HybridState(sc.x0, sc.q0)
    dist = DisturbanceProcess(natural=sc.natural, seed=seed,
                              stream=streams.substream("fidelity", sc.name))
    real = rollout(sc.model_for(twin.real), obj["defender"],
                   as_policy(sc.attack), dist, s0, obj["scenarios"].T)
    tw = DigitalTwin(sc.model_for(twin.model), real=twin.real)
    twin_traj, res = tw.track(real, e_max=fid["e_max"])
    rs = ResultSet(["t", "e", "Q_real", "Q_twin"])
    for t in range(len(real)):
        rs.rows.append((t, float(res["e"][t]), float(real.Q[t]),
                        float(twin_traj.Q[t])))
    report.add_table("fidelity", rs)
    report.values["fidelity_scenario"] = sc.name
    report.values["F"] = res["F"]
    report.values["e_max"] = res["e_max"]


def _samples_table(summary):
    rs = ResultSet(["scenario", "sample", "L", "M", "D", "T_d"])
    for st in summary.stats:
        for row in st["samples"].rows:
            rs.rows.append((st["scenario"],) + tuple(row))
    return rs


def _run_pra(obj, d, seed, report):
    twin = obj["twin"]
    summary = assess(twin.model, obj["defender"], obj["scenarios"], obj["N"],
                     seed, obj["alpha"])
    report.add_table("risk", summary.to_resultset())
    report.add_table("samples", _samples_table(summary))
    report.values["expected_loss"] = summary.expected_loss
    report.values["cvar"] = summary.cvar
    report.values["var"] = summary.var
    report.values["alpha"] = summary.alpha
    report.values["counts"] = summary.counts
    if obj["fidelity"] is not None:
        _run_fidelity(obj, seed, report)


# strategic


def _check_embedding(game, emb):
    errs = list()
    emb.check(game)
    for i, s in enumerate(game.states):
        for who, acts in (("defender", game.defender_actions[i]),
                          ("attacker", game.attacker_actions[i])):
            for a in acts:
                try:
                    emb.input_of(who, a)
                except ResilError as e:
                    errs.append(str(e))
    if len(errs) > 0:
        raise ValidationError(sorted(set(errs)))


def _prepare_strategic(d, seed, errs):
    obj = OrderedDict()
    obj["game"] = _block(errs, d, "game", build_game)
    obj["model"] = _block(errs, d, "model", build_model)
    obj["embedding"] = _block(errs, d, "embedding", build_embedding)
    if obj["game"] is not None and obj["embedding"] is not None:
        _attempt(errs, "embedding", _check_embedding, obj["game"],
                 obj["embedding"])
    T = _integer(errs, "T", d["T"], low=1)
    q_min = _number(errs, "q_min", d["q_min"], check=lambda v: v >= 0,
                    expect="nonnegative")
    window = _window(errs, d.get("window"), T)
    obj["scenarios"] = None
    if obj["model"] is not None and T is not None and q_min is not None and \
            d.get("scenarios") is not None:
        obj["scenarios"] = _attempt(errs, "scenarios", build_scenarios,
                                    d["scenarios"], obj["model"], T,
                                    window=window, q_min=q_min)
    obj["N"] = _integer(errs, "N", d["N"], low=1)
    obj["alpha"] = _number(errs, "alpha", d["alpha"],
                           check=lambda v: 0.0 <= v < 1.0, expect="in [0, 1)")
    mode = _choice(errs, "mode", d["mode"], ("equilibrium", "robust", "both"))
    obj["modes"] = ["equilibrium", "robust"] if mode == "both" else [mode]
    for key in ("defender_cost", "attacker_cost"):
        c = d.get(key)
        if c is not None and (not isinstance(c, dict) or any(
                not isinstance(v, numbers.Real) or v < 0
                for v in c.values())):
            errs.append("{}: must map action labels to nonnegative "
                        "costs".format(key))
    obj["attacker_weight"] = _number(errs, "attacker_weight",
                                     d["attacker_weight"])
    obj["tol"] = _number(errs, "tol", d["tol"], check=lambda v: v > 0,
                         expect="positive")
    obj["max_iter"] = _integer(errs, "max_iter", d["max_iter"], low=1)
    return obj


def _run_strategic(obj, d, seed, report):
    rs = ResultSet(["mode", "expected_loss", "cvar", "var", "defender_loss",
                    "attacker_utility"])
    for k, mode in enumerate(obj["modes"]):
        res = strategic_pipeline(
            obj["game"], obj["model"], obj["scenarios"], obj["embedding"],
            obj["N"], seed, obj["alpha"], mode=mode,
            defender_cost=d.get("defender_cost"),
            attacker_cost=d.get("attacker_cost"),
            attacker_weight=obj["attacker_weight"], tol=obj["tol"],
            max_iter=obj["max_iter"])
        if k == 0:
            report.add_table("equilibrium", res["solution"].to_resultset())
        report.add_table("risk_{}".format(mode),
                         res["summary"].to_resultset())
        st = res["strategic"]
        rs.rows.append((mode, st["expected_loss"], res["summary"].cvar,
                        res["summary"].var, st["defender_loss"],
                        st["attacker_utility"]))
    report.add_table("strategic", rs)
    if obj["game"].meta:
        report.values["game"] = obj["game"].meta


# riskgraph


def _prepare_riskgraph(d, seed, errs):
    obj = OrderedDict(tree=None)
    if d.get("tree") is not None and d.get("risk") is not None:
        res = _attempt(errs, "tree", load_riskgraph, d)
        if res is not None:
            obj["tree"], obj["system"], obj["risk"] = res
    obj["top_k"] = _integer(errs, "top_k", d.get("top_k"), low=1,
                            optional=True)
    if obj["tree"] is not None:
        missing = [v for v in obj["tree"].nodes if v not in obj["risk"]]
        if len(missing) > 0:
            errs.append("risk: no risk given for nodes {}".format(missing))
    return obj


def _run_riskgraph(obj, d, seed, report):
    W = mocus_cut_sets(obj["tree"])
    r = obj["risk"]
    cs = ResultSet(["cut_set", "order", "nodes"])
    for k, w in enumerate(W.to_list()):
        cs.rows.append((k, len(w), " ".join(w)))
    report.add_table("cut_sets", cs)
    report.add_table("importance", rank_mitigations(W, r, top_k=obj["top_k"]))
    der = derivative_importance(W, r)
    report.add_table("derivatives", ResultSet(
        ["node", "dR_dr"], [(v, g) for v, g in der.items()]))
    report.values["n_cut_sets"] = len(W)
    report.values["systemic_risk"] = systemic_risk(W, r)
    if d["exact"]:
        if len(W.nodes) <= ENUMERATION_LIMIT:
            report.values["exact_risk"] = exact_risk(W, r)
        else:
            logger.warning("{} nodes exceed the exact enumeration limit of "
                           "{}".format(len(W.nodes), ENUMERATION_LIMIT))


# net


def _prepare_net(d, seed, errs):
    obj = OrderedDict()
    g = d.get("rgg")
    obj["rgg"] = None
    if g is not None:
        if not isinstance(g, dict):
            errs.append("rgg: must be a mapping")
        else:
            sub = list()
            obj["rgg"] = OrderedDict(
                lam=_number(sub, "lam", g.get("lam", 1.0),
                            check=lambda v: v >= 0, expect="nonnegative"),
                side=_number(sub, "side", g.get("side"),
                             check=lambda v: v > 0, expect="positive"),
                rad=_number(sub, "rad", g.get("rad", 1.0),
                            check=lambda v: v > 0, expect="positive"),
                classes=g.get("classes"))
            _prefixed(errs, "rgg", sub)
    side = None if obj["rgg"] is None else obj["rgg"]["side"]
    p = d.get("percolation")
    obj["percolation"] = None
    if p is not None:
        sub = list()
        param = _choice(sub, "param", p.get("param", "rad"), ("rad", "lam"))
        grid = p.get("grid")
        if not isinstance(grid, list) or len(grid) == 0 or \
                any(b < a for a, b in zip(grid[:-1], grid[1:])):
            sub.append("grid: must be a nonempty ascending list")
        samples = _integer(sub, "samples", p.get("samples", 10), low=1)
        base = obj["rgg"] or dict(lam=1.0, rad=1.0)
        obj["percolation"] = OrderedDict(
            param=param, grid=grid, samples=samples,
            lam=p.get("lam", base["lam"]), rad=p.get("rad", base["rad"]),
            side=p.get("side", side))
        _prefixed(errs, "percolation", sub)
    s = d.get("site")
    obj["site"] = None
    if s is not None:
        sub = list()
        grid = s.get("grid")
        if not isinstance(grid, list) or len(grid) == 0 or \
                any(v < 0 or v > 1 for v in grid):
            sub.append("grid: must be a nonempty list in [0, 1]")
        samples = _integer(sub, "samples", s.get("samples", 10), low=1)
        obj["site"] = OrderedDict(grid=grid, samples=samples)
        _prefixed(errs, "site", sub)
    e = d.get("sis")
    obj["sis"] = None
    if e is not None:
        model = _attempt(errs, "sis", EpidemicModel, e.get("beta"),
                         e.get("mu"), dt=e.get("dt", 0.1))
        T = _integer(errs, "sis.T", e.get("T", 100), low=1)
        s0 = _number(errs, "sis.s0", e.get("s0", 0.1),
                     check=lambda v: 0.0 <= v <= 1.0, expect="in [0, 1]")
        obj["sis"] = OrderedDict(model=model, T=T, s0=s0)
    sp = d.get("spectral")
    obj["spectral"] = None
    if sp is not None and sp is not False:
        if sp is True:
            if obj["sis"] is None or obj["sis"]["model"] is None:
                errs.append("spectral: needs beta and mu, or an sis block")
            else:
                m = obj["sis"]["model"]
                obj["spectral"] = OrderedDict(beta=m.beta, mu=m.mu)
        else:
            beta = _number(errs, "spectral.beta", sp.get("beta"),
                           check=lambda v: v >= 0, expect="nonnegative")
            mu = _number(errs, "spectral.mu", sp.get("mu"),
                         check=lambda v: v > 0, expect="positive")
            obj["spectral"] = OrderedDict(beta=beta, mu=mu)
    obj["degree"] = bool(d["degree"])
    obj["edgelist"] = bool(d["edgelist"])
    return obj


def _run_net(obj, d, seed, report):
    g = obj["rgg"]
    net = sample_rgg(g["lam"], g["side"], g["rad"], seed=seed,
                     classes=g["classes"])
    report.values["n_nodes"] = net.n
    report.values["n_edges"] = len(net.edges)
    report.values["degenerate"] = net.degenerate
    if net.n > 0:
        report.values["giant_fraction"] = largest_component_fraction(net)
    if obj["degree"] and net.n > 0:
        ds = degree_stats(net)
        rs = ResultSet(["k", "count", "pmf"])
        for k, c in enumerate(ds["histogram"]):
            pmf = None if ds["pmf"] is None else float(ds["pmf"][k])
            rs.rows.append((k, int(c), pmf))
        report.add_table("degree", rs)
        for key in ("mean", "stderr", "theoretical_mean", "chi2", "dof",
                    "p_value"):
            report.values["degree_{}".format(key)] = ds[key]
    p = obj["percolation"]
    if p is not None:
        res = percolation_scan(p["grid"], p["side"], param=p["param"],
                               lam=p["lam"], rad=p["rad"],
                               samples=p["samples"], seed=seed)
        report.add_table("percolation", res["curve"])
        report.values["percolation_threshold"] = res["threshold"]
        report.values["percolation_bracketed"] = res["bracketed"]
    s = obj["site"]
    if s is not None and net.n > 0:
        res = site_percolation(net, s["grid"], samples=s["samples"],
                               seed=seed)
        report.add_table("site_percolation", res["curve"])
        report.values["site_threshold"] = res["threshold"]
    e = obj["sis"]
    if e is not None and net.n > 0:
        res = sis_simulate(net, e["model"], e["s0"], e["T"])
        report.add_table("sis", ResultSet(
            ["t", "I"], [(t, float(v)) for t, v in enumerate(res["I"])]))
        report.values["sis_final"] = float(res["I"][-1])
    sp = obj["spectral"]
    if sp is not None and net.n > 0:
        ind = stability_indicators(net, sp["beta"], sp["mu"])
        for k, v in ind.items():
            report.values[k] = v
    if obj["edgelist"]:
        report.files["edges.txt"] = net.write_edgelist


_kinds = OrderedDict([
    ("rollout", (_prepare_rollout, _run_rollout)),
    ("metrics", (_prepare_metrics, _run_metrics)),
    ("fallback", (_prepare_fallback, _run_fallback)),
    ("mtd", (_prepare_mtd, _run_mtd)),
    ("mpc", (_prepare_mpc, _run_mpc)),
    ("game", (_prepare_game, _run_game)),
    ("pra", (_prepare_pra, _run_pra)),
    ("strategic", (_prepare_strategic, _run_strategic)),
    ("riskgraph", (_prepare_riskgraph, _run_riskgraph)),
    ("net", (_prepare_net, _run_net)),
])


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    out = ScenarioFile(data=cfg.data)
    out.path = cfg.path
    out.data["seed"] = seed
    return out


def prepare(cfg):
    """Resolve defaults and build the module objects of a scenario.

    Returns:
        (tuple): (resolved configuration dict, prepared objects).

    Raises:
        ValidationError: With every problem found in the file.

    """
    errs = cfg.problems()
    kind = cfg.kind
    if kind not in _kinds:
        raise ValidationError(errs, path=cfg.path)
    d = cfg.resolved()
    seed = d["seed"]
    if seed is None and _needs_seed(kind, d):
        errs.append("seed: required for a stochastic {} experiment".format(
            kind))
    try:
        obj = _kinds[kind][0](d, seed, errs)
    except (AttributeError, TypeError, KeyError, ValueError) as e:
        errs.append("{}: malformed block: {}".format(kind, _message(e)))
        obj = None
    if len(errs) > 0:
        raise ValidationError(errs, path=cfg.path)
    return d, obj


def load_scenario(path, seed=None):
    """Load and fully validate a scenario file.

    Args:
        path (str): The scenario file.
        seed (int, optional): Overrides the seed in the file.

    Returns:
        (ScenarioFile): The validated scenario.

    Raises:
        ValidationError: Listing every problem, parse errors included.

    """
    cfg = _with_seed(ScenarioFile(path), seed)
    prepare(cfg)
    return cfg


def run_experiment(cfg, seed=None):
    """Run the experiment described by a scenario.

    Args:
        cfg (ScenarioFile): The scenario (validated again here).
        seed (int, optional): Overrides the seed in the file.

    Returns:
        (RunReport): Tables and values of the run.

    Raises:
        ValidationError: If the scenario is invalid.
        ExperimentError: Wrapping any module error raised while running.

    """
    cfg = _with_seed(cfg, seed)
    d, obj = prepare(cfg)
    kind = d["kind"]
    report = RunReport(kind, d, seed=d["seed"], version=__version__)
    report.started = datetime.datetime.now(
        datetime.timezone.utc).isoformat()
    start = time.time()
    logger.info("running {} experiment{}".format(
        kind, "" if cfg.path is None else " from {}".format(cfg.path)))
    try:
        _kinds[kind][1](obj, d, d["seed"], report)
    except ResilError as e:
        raise ExperimentError("{} experiment failed: {}".format(kind, e),
                              kind=kind) from e
    report.wall_clock = time.time() - start
    logger.info("{} experiment done in {:.3f} s".format(
        kind, report.wall_clock))
    return report
