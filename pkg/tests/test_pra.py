# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test the digital twin, Monte Carlo risk assessment and the strategic
pipeline.
"""

import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as nt

from resilkit.core import (Trajectory, HybridState, DisturbanceProcess,
                           rollout, DomainError, EmbeddingError,
                           ModelMismatchError)
from resilkit.core.models import identity_model, backhaul_capacity
from resilkit.core.stats import var_cvar, cvar_objective, mean_var

from resilkit.games import StochasticGame

from resilkit.pra import (DigitalTwin, twin_fidelity, Scenario, ScenarioSet,
                          trajectory_metrics, scenario_rollout_mc,
                          aggregate_risk, assess, Embedding,
                          strategic_pipeline)


class FidelityTest(TestCase):

    def setUp(self):
        self.real = Trajectory.from_performance([0.0, 0.0, 0.0], 5.0)

    def test_scores(self):
        same = Trajectory.from_performance([0.0, 0.0, 0.0], 5.0)
        self.assertEqual(twin_fidelity(self.real, same)["F"], 1.0)
        off = Trajectory.from_performance([0.0, 1.0, 1.0], 5.0)
        self.assertEqual(twin_fidelity(self.real, off, e_max=1.0)["F"], 0.0)
        half = Trajectory.from_performance([0.0, 1.0, 0.0], 5.0)
        res = twin_fidelity(self.real, half, e_max=1.0)
        self.assertAlmostEqual(res["F"], 0.5)
        nt.assert_allclose(res["e"], [0.0, 1.0, 0.0])
        # Errors beyond e_max clip the score at zero.
        far = Trajectory.from_performance([0.0, 4.0, 4.0], 5.0)
        self.assertEqual(twin_fidelity(self.real, far, e_max=1.0)["F"], 0.0)

    def test_errors(self):
        short = Trajectory.from_performance([0.0, 0.0], 5.0)
        with self.assertRaises(DomainError):
            twin_fidelity(self.real, short)
        with self.assertRaises(DomainError):
            twin_fidelity(self.real, self.real, e_max=0.0)
        with self.assertRaises(ModelMismatchError):
            DigitalTwin(identity_model(dim=2),
                        real=identity_model(dim=1))

    def test_track(self):
        real_model = backhaul_capacity(b_max=10.0, cut_drop=5.0)
        cuts = DisturbanceProcess(natural={"kind": "fixed",
                                           "values": [0, 1, 0, 0]})
        real = rollout(real_model, 1.0, None, cuts, HybridState(10.0), 4)
        twin = DigitalTwin(backhaul_capacity(b_max=10.0, cut_drop=5.0),
                           real=real_model)
        copy, fid = twin.track(real, disturbances=cuts)
        self.assertEqual(fid["F"], 1.0)
        nt.assert_allclose(copy.Q, real.Q)
        # Without the cut the twin drifts from the real system.
        blind, fid = twin.track(real)
        self.assertLess(fid["F"], 1.0)


class RiskTest(TestCase):

    def test_cvar(self):
        v, c = var_cvar([1, 2, 3, 4], 0.5)
        self.assertAlmostEqual(c, 3.5)
        self.assertEqual(v, 3.0)
        self.assertAlmostEqual(var_cvar([1, 2, 3, 4], 0.0)[1], 2.5)
        # The exact value matches the minimization form at VaR.
        nt.assert_allclose(cvar_objective([1, 2, 3, 4], v, 0.5), c)
        for eta in np.linspace(0.0, 5.0, 51):
            self.assertGreaterEqual(
                cvar_objective([1, 2, 3, 4], eta, 0.5), c - 1e-12)
        with self.assertRaises(DomainError):
            var_cvar([1, 2], 1.0)
        mean, var, ok = mean_var([2.0])
        self.assertFalse(ok)
        self.assertTrue(np.isnan(var))

    def test_cvar_monotone(self):
        rng = np.random.default_rng(17)
        alphas = np.linspace(0.0, 0.95, 20)
        for k in range(50):
            x = rng.exponential(2.0, size=int(rng.integers(1, 60)))
            w = None if k % 2 == 0 else rng.uniform(0.1, 1.0, size=len(x))
            c = [var_cvar(x, a, weights=w)[1] for a in alphas]
            self.assertTrue(np.all(np.diff(c) >= -1e-12))
            self.assertLessEqual(c[-1], np.max(x) + 1e-12)

    def test_mixture_linear(self):
        model = backhaul_capacity(b_max=10.0, cut_drop=4.0)
        runs = list()
        for p in (0.1, 0.4, 0.8):
            sc = ScenarioSet(
                [Scenario("cuts", p, x0=10.0,
                          natural={"kind": "bernoulli", "p": 0.4}),
                 Scenario("storm", 1.0 - p, x0=10.0,
                          natural={"kind": "bernoulli", "p": 0.8})],
                15, q_min=5.0)
            runs.append(assess(model, 1.0, sc, 20, 99, 0.9))
        means = [[st["mean"]["L"] for st in r.stats] for r in runs]
        # The scenario samples do not depend on the mixture weights.
        nt.assert_array_equal(means[0], means[1])
        nt.assert_array_equal(means[0], means[2])
        for p, r in zip((0.1, 0.4, 0.8), runs):
            nt.assert_allclose(r.expected_loss,
                               p * means[0][0] + (1 - p) * means[0][1],
                               rtol=1e-12)
        nt.assert_allclose(runs[1].expected_loss,
                           (4.0 * runs[0].expected_loss
                            + 3.0 * runs[2].expected_loss) / 7.0,
                           rtol=1e-12)

    def test_aggregate(self):
        stats = [dict(scenario="a", N=1, mean=dict(L=2.0),
                      samples=dict(L=[2.0])),
                 dict(scenario="b", N=1, mean=dict(L=4.0),
                      samples=dict(L=[4.0]))]
        summary = aggregate_risk(stats, [0.5, 0.5], 0.5)
        self.assertAlmostEqual(summary.expected_loss, 3.0)
        self.assertAlmostEqual(summary.cvar, 4.0)
        with self.assertRaises(DomainError):
            aggregate_risk(stats, [0.5, 0.4], 0.5)
        with self.assertRaises(DomainError):
            aggregate_risk(stats, [1.0], 0.5)

    def test_scenario_set(self):
        with self.assertRaises(DomainError):
            ScenarioSet([Scenario("a", 0.6), Scenario("b", 0.3)], 10)
        with self.assertRaises(DomainError):
            ScenarioSet([Scenario("a", 1.0)], 10, window=(3, 12))
        with self.assertRaises(DomainError):
            ScenarioSet([], 10)

    def test_metrics_window(self):
        tr = Trajectory.from_performance([10, 5, 0, 10], 10)
        m = trajectory_metrics(tr, (0, 3), 6.0)
        self.assertAlmostEqual(m["L"], 1.5)
        self.assertEqual(m["M"], 1.0)
        self.assertEqual(m["D"], 0.0)
        self.assertEqual(m["T_d"], 2)
        m = trajectory_metrics(tr, (1, 2), 6.0)
        self.assertAlmostEqual(m["D"], 1.0)

    def test_single_sample(self):
        model = identity_model(q_max=10.0)
        res = scenario_rollout_mc(model, None, Scenario("hold", 1.0, x0=5.0),
                                  1, 0, 4)
        self.assertFalse(res["variance_defined"])
        self.assertAlmostEqual(res["mean"]["L"], 2.5)
        self.assertTrue(np.isnan(res["var"]["L"]))

    def test_monte_carlo(self):
        model = backhaul_capacity(b_max=10.0, cut_drop=4.0)
        sc = ScenarioSet(
            [Scenario("calm", 0.7, x0=10.0),
             Scenario("cuts", 0.3, x0=10.0,
                      natural={"kind": "bernoulli", "p": 0.3})],
            20, q_min=5.0)
        a = assess(model, 1.0, sc, 30, 2024, 0.9)
        b = assess(model, 1.0, sc, 30, 2024, 0.9)
        self.assertEqual(a.expected_loss, b.expected_loss)
        self.assertEqual(a.cvar, b.cvar)
        self.assertEqual(a.stats[0]["mean"]["L"], 0.0)
        self.assertGreater(a.stats[1]["mean"]["L"], 0.0)
        nt.assert_allclose(a.expected_loss, 0.3 * a.stats[1]["mean"]["L"])
        self.assertGreaterEqual(a.cvar, a.expected_loss)
        self.assertEqual(a.counts, [30, 30])
        c = assess(model, 1.0, sc, 30, 2025, 0.9)
        self.assertNotEqual(c.stats[1]["mean"]["L"],
                            a.stats[1]["mean"]["L"])
        rs = a.to_resultset()
        self.assertEqual(list(rs["scenario"]), ["calm", "cuts", "aggregate"])

        # Samples share nothing but the seed: the first N samples of a
        # larger run are the same draws.
        big = scenario_rollout_mc(model, 1.0, sc.scenarios[1], 40, 2024, 20,
                                  q_min=5.0)
        nt.assert_array_equal(big["samples"]["L"][:30],
                              a.stats[1]["samples"]["L"])


class StrategicTest(TestCase):

    def setUp(self):
        self.game = StochasticGame(["s"], [["a", "b"]], [["x", "y"]],
                                   [np.full((2, 2), -1.0)],
                                   [np.ones((2, 2, 1))], 0.9)
        self.emb = Embedding({"0": "s"}, {"a": 0.0, "b": 0.0},
                             {"x": 0.0, "y": 0.0}, clip=True)
        self.scenarios = ScenarioSet([Scenario("hold", 1.0, x0=5.0)], 4)

    def test_modes(self):
        model = identity_model(q_max=10.0)
        out = dict()
        for mode in ("equilibrium", "robust"):
            out[mode] = strategic_pipeline(
                self.game, model, self.scenarios, self.emb, 3, 1, 0.5,
                mode=mode, defender_cost={"a": 0.1, "b": 0.1})
        for key in ("expected_loss", "defender_loss", "attacker_utility"):
            self.assertAlmostEqual(out["equilibrium"]["strategic"][key],
                                   out["robust"]["strategic"][key])
        st = out["equilibrium"]["strategic"]
        self.assertAlmostEqual(st["expected_loss"], 2.5)
        self.assertAlmostEqual(st["defender_loss"], 0.6)
        self.assertAlmostEqual(st["attacker_utility"], 0.5)
        with self.assertRaises(DomainError):
            strategic_pipeline(self.game, model, self.scenarios, self.emb, 3,
                               1, 0.5, mode="greedy")

    def test_embedding(self):
        bad = Embedding({"0": "nowhere"}, {}, {})
        with self.assertRaises(EmbeddingError):
            bad.check(self.game)
        with self.assertRaises(EmbeddingError):
            self.emb.input_of("defender", "teleport")
        strict = Embedding({"0": "s"}, {}, {})
        self.assertEqual(strict.state_of(HybridState(0.5)), "s")
        with self.assertRaises(EmbeddingError):
            strict.state_of(HybridState(3.0))
        with self.assertRaises(EmbeddingError):
            strict.state_of(HybridState(-0.5))
        self.assertEqual(self.emb.state_of(HybridState(3.0)), "s")
        self.assertEqual(Embedding({}, {"migrate": 1.0}, {}).input_of(
            "defender", "migrate:2"), 1.0)
        with self.assertRaises(DomainError):
            Embedding({}, {}, {}, key="color")

    def test_unmapped_state(self):
        # The twin starts at x = 5, outside the one-bucket table.
        emb = Embedding({"0": "s"}, {"a": 0.0, "b": 0.0},
                        {"x": 0.0, "y": 0.0})
        model = identity_model(q_max=10.0)
        with self.assertRaises(EmbeddingError):
            strategic_pipeline(self.game, model, self.scenarios, emb, 3, 1,
                               0.5, mode="equilibrium")
        inside = ScenarioSet([Scenario("hold", 1.0, x0=0.5)], 4)
        out = strategic_pipeline(self.game, model, inside, emb, 3, 1, 0.5,
                                 mode="equilibrium")
        self.assertAlmostEqual(out["strategic"]["expected_loss"], 4.75)


if __name__ == "__main__":
    unittest.main()
