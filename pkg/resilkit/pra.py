# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Digital twin and probabilistic risk assessment.

A digital twin is a surrogate dynamics model run alongside the real
system.  Given a set of weighted disruption scenarios, the twin is rolled
out many times per scenario with independent natural disturbance streams,
per-trajectory resilience metrics are collected, and the scenario
statistics are combined into an expected loss and a tail risk (CVaR).

The strategic pipeline first solves an attacker-defender game, freezes the
resulting strategies as twin policies through an explicit embedding, then
runs the same assessment.

"""

import logging
from collections import OrderedDict

import numpy as np

from .core.errors import DomainError, EmbeddingError, ModelMismatchError
from .core.dynamics import (HybridState, DisturbanceProcess, rollout,
                            as_policy)
from .core.models import mode_rules
from .core.resultset import ResultSet
from .core.stats import var_cvar, mean_var
from .core import streams
from .games.shapley import shapley_value_iteration, worst_case_attacker

logger = logging.getLogger(__name__)


class DigitalTwin(object):
    """Surrogate model paired with a real model.

    Args:
        model (DynamicsModel): The surrogate dynamics f_hat.
        real (DynamicsModel, optional): The paired real model.  When given,
            its state dimension and mode set must match the surrogate.

    """

    def __init__(self, model, real=None):
        if real is not None:
            if real.dim != model.dim:
                raise ModelMismatchError(
                    "twin dimension {} differs from real dimension {}".format(
                        model.dim, real.dim))
            if set(real.modes) != set(model.modes):
                raise ModelMismatchError(
                    "twin modes {} differ from real modes {}".format(
                        list(model.modes), list(real.modes)))
        self.model = model
        self.real = real

    def replay(self, defender, attack, disturbances, s0, T):
        """Roll the twin out on a replayed attack path."""
        if disturbances is None:
            disturbances = DisturbanceProcess()
        return rollout(self.model, defender, attack, disturbances, s0, T)

    def track(self, real, disturbances=None, e_max=None):
        """Run the twin on the controls and attacks recorded in ``real``.

        The twin does not observe the real natural disturbances; it uses
        ``disturbances`` (default none).

        Returns:
            (tuple): (twin Trajectory, fidelity dict).

        """
        T = real.T
        twin = self.replay(list(real.u[:T]), list(real.w[:T]), disturbances,
                           real.state(0), T)
        return twin, twin_fidelity(real, twin, e_max=e_max)


def twin_fidelity(real, twin, e_max=None):
    """Synchronization error and fidelity score.

    e_t = |x_t - x_hat_t| and F_T = 1 - (1/T) sum_{t=1}^T e_t / e_max,
    clipped to [0, 1].

    Args:
        real (Trajectory): Reference trajectory.
        twin (Trajectory): Twin trajectory.
        e_max (float, optional): Error normalization.  Defaults to the
            largest observed error (fidelity 1 if there is none).

    Returns:
        (dict): ``e`` (error per record), ``F`` and ``e_max``.

    """
    if len(real) != len(twin):
        raise DomainError("horizon mismatch: real has {} records, twin "
                          "{}".format(len(real), len(twin)))
    if real.x.shape != twin.x.shape:
        raise ModelMismatchError("state shapes differ: {} vs {}".format(
            real.x.shape, twin.x.shape))
    e = np.linalg.norm(real.x - twin.x, axis=1)
    errs = e[1:] if len(e) > 1 else e
    if e_max is None:
        e_max = float(np.max(errs))
        if e_max == 0.0:
            return OrderedDict(e=e, F=1.0, e_max=0.0)
    if e_max <= 0:
        raise DomainError("e_max must be positive, got {}".format(e_max))
    F = float(np.clip(1.0 - np.mean(errs / e_max), 0.0, 1.0))
    return OrderedDict(e=e, F=F, e_max=float(e_max))


class Scenario(object):
    """One disruption scenario.

    Args:
        name (str): Scenario label.
        p (float): Scenario probability.
        attack: Attacker path, constant or policy (None for no attack).
        x0 (array): Initial state.
        q0 (str): Initial mode.
        natural: Natural disturbance path or generator spec.
        mode_rules (list, optional): Scenario-specific mode law.

    """

    def __init__(self, name, p, attack=None, x0=0.0, q0="normal",
                 natural=None, mode_rules=None):
        self.name = str(name)
        self.p = float(p)
        self.attack = attack
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
        self.q0 = str(q0)
        self.natural = natural
        self.mode_rules = mode_rules

    def model_for(self, model):
        """Twin model with this scenario's mode law applied."""
        if self.mode_rules is None:
            return model
        return model.with_mode_map(mode_rules(self.mode_rules, model.modes),
                                   name="{}[{}]".format(model.name, self.name))

    def to_dict(self):
        return OrderedDict(name=self.name, p=self.p, x0=self.x0.tolist(),
                           q0=self.q0)


class ScenarioSet(object):
    """Weighted scenarios sharing a horizon, window and threshold.

    Args:
        scenarios (list): Scenario objects.
        T (int): Rollout horizon.
        window (tuple, optional): Inclusive metric window (t_f, t_r);
            default the whole horizon.
        q_min (float): Downtime threshold on Q_t.

    """

    def __init__(self, scenarios, T, window=None, q_min=0.0):
        self.scenarios = list(scenarios)
        self.T = int(T)
        self.window = (0, self.T) if window is None else \
            (int(window[0]), int(window[1]))
        self.q_min = float(q_min)
        errs = self.problems()
        if len(errs) > 0:
            raise DomainError("; ".join(errs))

    def problems(self):
        errs = list()
        if len(self.scenarios) == 0:
            errs.append("scenario set is empty")
            return errs
        p = np.array([s.p for s in self.scenarios])
        if np.any(p < 0):
            errs.append("scenario probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            errs.append("scenario probabilities sum to {:.12g}, not 1".format(
                p.sum()))
        if self.T < 1:
            errs.append("horizon must be >= 1")
        t0, t1 = self.window
        if not (0 <= t0 <= t1 <= self.T):
            errs.append("window [{}, {}] outside 0..{}".format(t0, t1, self.T))
        return errs

    @property
    def probabilities(self):
        return np.array([s.p for s in self.scenarios])

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


def trajectory_metrics(traj, window, q_min):
    """Per-trajectory L, M, D and downtime over an inclusive window.

    With s_t = 1 - Q_t/Q_max: L = sum s_t, M = max s_t, D = s_{t_r} and
    T_d counts the records with Q_t < q_min.

    """
    t0, t1 = window
    if not (0 <= t0 <= t1 < len(traj)):
        raise DomainError("window [{}, {}] outside trajectory".format(t0, t1))
    s = traj.shortfall()[t0:t1 + 1]
    Q = traj.Q[t0:t1 + 1]
    return OrderedDict(L=float(np.sum(s)), M=float(np.max(s)),
                       D=float(s[-1]), T_d=int(np.count_nonzero(Q < q_min)))


_metric_keys = ("L", "M", "D", "T_d")


def scenario_rollout_mc(model, defender, scenario, N, seed, T, window=None,
                        q_min=0.0, attacker=None, keep=1, observer=None):
    """Monte Carlo rollouts of the twin for one scenario.

    Sample k reads its natural disturbances from the stream
    ``scenario/<name>/k`` of the master seed, so samples differ only in
    their disturbance draws and every sample can be regenerated alone.

    Args:
        model (DynamicsModel): Twin model.
        defender: Defender policy.  Objects with a ``for_sample(k)`` method
            are specialized per sample.
        scenario (Scenario): The scenario.
        N (int): Number of samples, >= 1.
        seed (int): Master seed.
        T (int): Horizon.
        window (tuple, optional): Metric window, default whole horizon.
        q_min (float): Downtime threshold.
        attacker (optional): Overrides the scenario attack path.
        keep (int): Number of sample trajectories to return.
        observer (callable, optional): Called as
            ``observer(k, traj, defender, attacker)`` after every sample.

    Returns:
        (dict): ``samples`` (ResultSet sample, L, M, D, T_d), ``mean`` and
            ``var`` per metric, ``variance_defined``, ``N`` and
            ``trajectories``.

    """
    if N < 1:
        raise DomainError("need at least one sample, got {}".format(N))
    window = (0, T) if window is None else window
    twin = scenario.model_for(model)
    s0 = HybridState(scenario.x0, scenario.q0)
    attack = scenario.attack if attacker is None else attacker
    base = "scenario/{}".format(scenario.name)
    rs = ResultSet(["sample"] + list(_metric_keys))
    kept = list()
    for k in range(N):
        dist = DisturbanceProcess(attack=None, natural=scenario.natural,
                                  seed=seed, stream=streams.substream(base, k))
        dpol = defender.for_sample(k) if hasattr(defender, "for_sample") \
            else defender
        apol = attack.for_sample(k) if hasattr(attack, "for_sample") \
            else attack
        traj = rollout(twin, dpol, as_policy(apol), dist, s0, T)
        if observer is not None:
            observer(k, traj, dpol, apol)
        m = trajectory_metrics(traj, window, q_min)
        rs.rows.append((k,) + tuple(m[key] for key in _metric_keys))
        if len(kept) < keep:
            kept.append(traj)
    mean, var = OrderedDict(), OrderedDict()
    defined = True
    for key in _metric_keys:
        mu, v, ok = mean_var(rs[key])
        mean[key] = mu
        var[key] = v
        defined = defined and ok
    if not defined:
        logger.warning("scenario {}: variance undefined with N=1".format(
            scenario.name))
    logger.debug("scenario {}: mean L {:.6g} over {} samples".format(
        scenario.name, mean["L"], N))
    return OrderedDict(scenario=scenario.name, samples=rs, mean=mean, var=var,
                       variance_defined=defined, N=N, trajectories=kept)


class RiskSummary(object):
    """Per-scenario statistics and their aggregate.

    Attributes:
        expected_loss (float): E[L] = sum_i p_i E[L_i].
        cvar (float): CVaR_alpha of the pooled weighted samples.
        var (float): VaR_alpha, the minimizing eta.
        alpha (float): Tail level.
        stats (list): Per-scenario Monte Carlo results.
        probabilities (array): Scenario probabilities.
        seed (int): Master seed, if known.

    """

    columns = ["scenario", "p", "n", "mean_L", "var_L", "mean_M", "var_M",
               "mean_D", "var_D", "mean_T_d", "var_T_d", "cvar_L", "var_alpha"]

    def __init__(self, stats, probabilities, alpha, expected_loss, cvar, var,
                 seed=None):
        self.stats = list(stats)
        self.probabilities = np.asarray(probabilities, dtype=np.float64)
        self.alpha = float(alpha)
        self.expected_loss = float(expected_loss)
        self.cvar = float(cvar)
        self.var = float(var)
        self.seed = seed

    @property
    def counts(self):
        return [st["N"] for st in self.stats]

    def to_resultset(self):
        """One row per scenario plus an ``aggregate`` row."""
        rs = ResultSet(self.columns)
        for st, p in zip(self.stats, self.probabilities):
            v, c = var_cvar(st["samples"]["L"], self.alpha)
            row = [st["scenario"], float(p), st["N"]]
            for key in _metric_keys:
                row += [st["mean"][key], st["var"][key]]
            rs.rows.append(tuple(row + [c, v]))
        agg = ["aggregate", 1.0, int(sum(self.counts)), self.expected_loss,
               None]
        for key in _metric_keys[1:]:
            agg += [float(np.dot(self.probabilities,
                                 [st["mean"][key] for st in self.stats])),
                    None]
        rs.rows.append(tuple(agg + [self.cvar, self.var]))
        return rs

    def to_dict(self):
        return OrderedDict(expected_loss=self.expected_loss, cvar=self.cvar,
                           var=self.var, alpha=self.alpha,
                           counts=self.counts, seed=self.seed,
                           scenarios=self.to_resultset().to_records())

    def __repr__(self):
        return "RiskSummary<E[L]={:.6g}, CVaR_{}={:.6g}>".format(
            self.expected_loss, self.alpha, self.cvar)


def aggregate_risk(stats, probabilities, alpha, seed=None):
    """Combine per-scenario Monte Carlo results.

    E[L] is the probability-weighted mean of the scenario means.  CVaR and
    VaR are taken on the pooled sample distribution in which sample k of
    scenario i carries weight p_i / N_i.

    Args:
        stats (list): Results of :func:`scenario_rollout_mc`.
        probabilities (array): Scenario probabilities.
        alpha (float): CVaR level in [0, 1).

    Returns:
        (RiskSummary): The summary.

    """
    p = np.asarray(probabilities, dtype=np.float64).reshape(-1)
    if len(p) != len(stats):
        raise DomainError("{} probabilities for {} scenarios".format(
            len(p), len(stats)))
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("scenario probabilities must be nonnegative and "
                          "sum to 1")
    if not (0.0 <= alpha < 1.0):
        raise DomainError("CVaR level must lie in [0, 1), got {}".format(
            alpha))
    expected = float(np.dot(p, [st["mean"]["L"] for st in stats]))
    pooled, weights = list(), list()
    for st, pi in zip(stats, p):
        L = np.asarray(st["samples"]["L"], dtype=np.float64)
        pooled.append(L)
        weights.append(np.full(len(L), pi / len(L)))
    var, cv = var_cvar(np.concatenate(pooled), alpha,
                       weights=np.concatenate(weights))
    return RiskSummary(stats, p, alpha, expected, cv, var, seed=seed)


def assess(model, defender, scenarios, N, seed, alpha, attacker=None):
    """Run every scenario of a ScenarioSet and aggregate."""
    stats = list()
    for sc in scenarios:
        stats.append(scenario_rollout_mc(
            model, defender, sc, N, seed, scenarios.T,
            window=scenarios.window, q_min=scenarios.q_min,
            attacker=attacker))
    return aggregate_risk(stats, scenarios.probabilities, alpha, seed=seed)


class Embedding(object):
    """Explicit map between game abstractions and twin inputs.

    Args:
        states (dict): Twin key to game state label.
        key (str): "bucket" keys by floor(x[0]), "mode" by the mode label.
        defender (dict): Defender action label (or family before ":") to
            twin input u.
        attacker (dict): Attacker action label (or family) to twin input w.
        clip (bool): Clip bucket keys into the known range.  Off by
            default, so a twin state outside the table raises
            EmbeddingError.

    """

    def __init__(self, states, defender, attacker, key="bucket", clip=False):
        if key not in ("bucket", "mode"):
            raise DomainError("embedding key must be bucket or mode")
        self.states = {str(k): str(v) for k, v in states.items()}
        self.defender = dict(defender)
        self.attacker = dict(attacker)
        self.key = key
        self.clip = clip

    def state_of(self, state):
        if self.key == "mode":
            k = state.q
        else:
            b = int(np.floor(state.x[0]))
            if self.clip:
                known = sorted(int(v) for v in self.states)
                b = min(max(b, known[0]), known[-1])
            k = str(b)
        if str(k) not in self.states:
            raise EmbeddingError("no game state for twin state {}".format(
                state))
        return self.states[str(k)]

    def input_of(self, who, label):
        table = self.defender if who == "defender" else self.attacker
        if label in table:
            return table[label]
        fam = label.split(":")[0]
        if fam in table:
            return table[fam]
        raise EmbeddingError("no twin input for {} action {!r}".format(
            who, label))

    def check(self, game):
        """Every game state label named in the table must exist."""
        for v in self.states.values():
            if v not in game.states:
                raise EmbeddingError("embedding names unknown game state "
                                     "{!r}".format(v))


class StrategyPolicy(object):
    """Twin policy that plays a frozen stationary game strategy.

    Mixed strategies are sampled from the stream ``<stream>/<sample>`` at
    step t, so the draws are fixed by the seed.  Chosen labels are kept in
    ``history``.

    """

    def __init__(self, game, embedding, strategy, who, seed=0,
                 stream="strategy", sample=0):
        self.game = game
        self.embedding = embedding
        self.strategy = strategy
        self.who = who
        self.seed = seed
        self.stream = stream
        self.sample = sample
        self.history = list()

    def for_sample(self, k):
        return StrategyPolicy(self.game, self.embedding, self.strategy,
                              self.who, seed=self.seed, stream=self.stream,
                              sample=k)

    def label(self, state, t):
        gs = self.embedding.state_of(state)
        i = self.game.index(gs)
        p = np.asarray(self.strategy[i])
        acts = self.game.defender_actions[i] if self.who == "defender" \
            else self.game.attacker_actions[i]
        if np.max(p) >= 1.0 - 1e-12:
            j = int(np.argmax(p))
        else:
            rng = streams.generator(
                self.seed, streams.substream(self.stream, self.sample), t)
            j = int(rng.choice(len(p), p=p / p.sum()))
        return acts[j]

    def __call__(self, state, t):
        lab = self.label(state, t)
        self.history.append(lab)
        return self.embedding.input_of(self.who, lab)


def _action_cost(costs, label):
    if label in costs:
        return float(costs[label])
    return float(costs.get(label.split(":")[0], 0.0))


def strategic_pipeline(game, model, scenarios, embedding, N, seed, alpha,
                       mode="equilibrium", defender_cost=None,
                       attacker_cost=None, attacker_weight=1.0, tol=1e-9,
                       max_iter=10000):
    """Solve a game, freeze the strategies and assess them on the twin.

    In ``equilibrium`` mode both players use their Shapley equilibrium
    strategies.  In ``robust`` mode the defender keeps its equilibrium
    strategy and the attacker plays the worst-case response to it.

    Besides the resilience loss, the strategic risk vector contains the
    defender loss E[mean_t(1 - Q_t/Q_max + c_b(u_t))] and the attacker
    utility E[mean_t(attacker_weight (1 - Q_t/Q_max) - c_r(w_t))] with
    per-action costs keyed by action label or family.

    Returns:
        (dict): ``summary`` (RiskSummary), ``solution``
            (EquilibriumSolution), ``defender`` and ``attacker``
            strategies, ``strategic`` (risk vector) and ``mode``.

    """
    if mode not in ("equilibrium", "robust"):
        raise DomainError("unknown strategic mode {!r}".format(mode))
    embedding.check(game)
    sol = shapley_value_iteration(game, tol=tol, max_iter=max_iter)
    pi_D = sol.defender
    if mode == "robust":
        wc = worst_case_attacker(game, pi_D)
        pi_A = wc["policy"]
    else:
        pi_A = sol.attacker
    c_b = dict() if defender_cost is None else dict(defender_cost)
    c_r = dict() if attacker_cost is None else dict(attacker_cost)

    stats = list()
    dloss, autil = list(), list()
    for sc in scenarios:
        dpol = StrategyPolicy(game, embedding, pi_D, "defender", seed=seed,
                              stream="strategy/defender/{}".format(sc.name))
        apol = StrategyPolicy(game, embedding, pi_A, "attacker", seed=seed,
                              stream="strategy/attacker/{}".format(sc.name))
        sd, sa = list(), list()

        def observe(k, traj, dp, ap):
            s = traj.shortfall()[:-1]
            cb = np.array([_action_cost(c_b, a) for a in dp.history])
            cr = np.array([_action_cost(c_r, a) for a in ap.history])
            sd.append(float(np.mean(s + cb)))
            sa.append(float(np.mean(attacker_weight * s - cr)))

        stats.append(scenario_rollout_mc(
            model, dpol, sc, N, seed, scenarios.T, window=scenarios.window,
            q_min=scenarios.q_min, attacker=apol, observer=observe))
        dloss.append(np.mean(sd))
        autil.append(np.mean(sa))
    summary = aggregate_risk(stats, scenarios.probabilities, alpha, seed=seed)
    p = scenarios.probabilities
    strategic = OrderedDict(
        expected_loss=summary.expected_loss,
        defender_loss=float(np.dot(p, dloss)),
        attacker_utility=float(np.dot(p, autil)))
    logger.info("strategic pipeline ({}): E[L]={:.6g} CVaR={:.6g}".format(
        mode, summary.expected_loss, summary.cvar))
    return OrderedDict(summary=summary, solution=sol, defender=pi_D,
                       attacker=pi_A, strategic=strategic, mode=mode)
