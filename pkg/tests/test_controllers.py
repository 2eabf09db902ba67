# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test fallback switching, moving target defense and receding horizon.
"""

import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as nt
from scipy.optimize import minimize

from resilkit.core import (HybridState, DisturbanceProcess, DomainError,
                           TransitionDomainError, ModelMismatchError)
from resilkit.core.models import scalar_linear, slice_queue

from resilkit.controllers import (LQFallbackSpec, lq_fold, fallback_decision,
                                  scalar_switch_threshold,
                                  lq_fallback_bruteforce, MTDState,
                                  mtd_update, mtd_objective,
                                  mtd_plan_horizon, kl_divergence,
                                  QuadraticCost, ShortfallCost, plan,
                                  receding_horizon_control, closed_loop)


class FallbackTest(TestCase):

    def setUp(self):
        self.spec = LQFallbackSpec.scalar(a0=2.0, a1=0.5, lam=1.0, s0=0.0,
                                          s1=0.5)

    def test_fold(self):
        nt.assert_allclose(lq_fold(self.spec, 0, [[1.0]]), [[3.0]])
        nt.assert_allclose(lq_fold(self.spec, 0, [[0.0]]), [[1.0]])
        nt.assert_allclose(lq_fold(self.spec, 0, [[1.0]], A=[[0.0]]),
                           [[1.0]])

    def test_threshold(self):
        rule = scalar_switch_threshold(self.spec)
        self.assertFalse(rule.below)
        thr = rule.threshold
        nt.assert_allclose(thr, np.sqrt(1.7), rtol=1e-12)
        self.assertAlmostEqual(thr, 1.3038, places=4)
        dec = fallback_decision(self.spec, [2.0])
        self.assertTrue(dec["switch"])
        self.assertLess(dec["margin"], 0.0)
        dec = fallback_decision(self.spec, [1.0])
        self.assertFalse(dec["switch"])

    def test_bounded_switch(self):
        # A cheap safe mode: switching pays off only near the origin.
        spec = LQFallbackSpec.scalar(a0=0.5, a1=2.0, lam=0.0, s0=1.0, s1=0.0)
        rule = scalar_switch_threshold(spec)
        self.assertTrue(rule.below)
        gap = 0.25 * (1.125 / 2.125 - 0.75)
        nt.assert_allclose(rule.threshold, np.sqrt(-1.0 / gap), rtol=1e-12)
        verdicts = [fallback_decision(spec, [x])["switch"]
                    for x in (0.0, 0.5, 5.0)]
        self.assertEqual(verdicts, [True, True, False])
        self.assertEqual([rule.switches(x) for x in (0.0, 0.5, 5.0)],
                         verdicts)

    def test_threshold_random(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a0, a1 = rng.uniform(0.1, 2.0, size=2)
            lam, s0, s1 = rng.uniform(0.0, 1.0, size=3)
            spec = LQFallbackSpec.scalar(a0=a0, a1=a1, lam=lam, s0=s0,
                                         s1=s1)
            rule = scalar_switch_threshold(spec)
            for x in rng.uniform(-10.0, 10.0, size=40):
                if np.isfinite(rule.threshold) and \
                        abs(abs(x) - rule.threshold) < 1e-6:
                    continue
                self.assertEqual(rule.switches(x),
                                 fallback_decision(spec, [x])["switch"])

    def test_never_switch(self):
        same = LQFallbackSpec.scalar(a0=1.5, a1=1.5, lam=0.1)
        self.assertEqual(scalar_switch_threshold(same).threshold, np.inf)
        for x in (0.0, 1.0, 100.0):
            self.assertFalse(fallback_decision(same, [x])["switch"])
        huge = LQFallbackSpec.scalar(a0=2.0, a1=0.5, lam=1e9)
        self.assertFalse(fallback_decision(huge, [10.0])["switch"])

    def test_bruteforce(self):
        dec = fallback_decision(self.spec, [2.0])
        bf = lq_fallback_bruteforce(self.spec, [2.0], step=1e-3)
        nt.assert_allclose(bf["J"], dec["J"], rtol=1e-4)
        self.assertEqual(bf["switch"], dec["switch"])
        nt.assert_allclose(bf["u"][0][0], float(dec["u"][0][0]), atol=2e-3)

    def test_bruteforce_random_scalar(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a0, a1 = rng.uniform(0.1, 2.0, size=2)
            lam, s0, s1 = rng.uniform(0.0, 1.0, size=3)
            spec = LQFallbackSpec.scalar(a0=a0, a1=a1, lam=lam, s0=s0,
                                         s1=s1)
            x = [rng.uniform(-2.0, 2.0)]
            dec = fallback_decision(spec, x)
            bf = lq_fallback_bruteforce(spec, x, step=1e-3, bound=10.0)
            nt.assert_allclose(bf["J"], dec["J"], rtol=1e-4, atol=1e-6)
            if abs(dec["margin"]) > 1e-4:
                self.assertEqual(bf["switch"], dec["switch"])

    def test_bruteforce_random_2d(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            A = [rng.uniform(-1.0, 1.0, size=(2, 2)) for m in (0, 1)]
            B = rng.uniform(-1.0, 1.0, size=(2, 1))
            s0, s1, lam = rng.uniform(0.0, 0.5, size=3)
            spec = LQFallbackSpec(A, B, [np.eye(2)] * 2, [np.eye(2)] * 2,
                                  [[1.0]], s=(s0, s1), lam=lam)
            x = rng.uniform(-1.0, 1.0, size=2)
            dec = fallback_decision(spec, x)
            bf = lq_fallback_bruteforce(spec, x, step=1e-3, bound=5.0)
            nt.assert_allclose(bf["J"], dec["J"], rtol=1e-4, atol=1e-6)
            if abs(dec["margin"]) > 1e-4:
                self.assertEqual(bf["switch"], dec["switch"])

    def test_matrix_spec(self):
        A0 = [[1.2, 0.1], [0.0, 0.9]]
        A1 = [[0.5, 0.0], [0.0, 0.5]]
        spec = LQFallbackSpec([A0, A1], [[1.0], [0.5]], [np.eye(2)] * 2,
                              [np.eye(2)] * 2, [[1.0]], s=(0.0, 0.2),
                              lam=0.5)
        dec = fallback_decision(spec, [1.0, -1.0])
        for G in dec["Gamma"]:
            nt.assert_allclose(G, G.T)
            self.assertTrue(np.all(np.linalg.eigvalsh(G) >= -1e-12))
        with self.assertRaises(ModelMismatchError):
            fallback_decision(spec, [1.0])
        with self.assertRaises(ModelMismatchError):
            scalar_switch_threshold(spec)


class MTDTest(TestCase):

    def test_update(self):
        f = np.array([0.2, 0.3, 0.5])
        nt.assert_allclose(mtd_update(f, [1.0, 1.0, 1.0], 0.5), f)
        out = mtd_update([0.5, 0.5], [1.0, 0.0], 1.0)
        nt.assert_allclose(out[1], 1.0 / (1.0 + np.exp(-1.0)))
        sharp = mtd_update([0.25] * 4, [0.3, 0.1, 0.7, 0.2], 1e-3)
        self.assertGreaterEqual(sharp[1], 0.999)
        # The softmax minimizes the regularized objective.
        ref = mtd_objective(out, [0.5, 0.5], [1.0, 0.0], 1.0)
        for p in np.linspace(0.05, 0.95, 19):
            self.assertLessEqual(
                ref, mtd_objective([1 - p, p], [0.5, 0.5], [1.0, 0.0], 1.0)
                + 1e-12)
        with self.assertRaises(DomainError):
            mtd_update([0.5, 0.5], [1.0, 0.0], 0.0)
        nt.assert_allclose(kl_divergence(f, f), 0.0, atol=1e-15)
        nt.assert_allclose(kl_divergence([1.0, 0.0], [0.5, 0.5]), np.log(2.0))

    def test_update_minimizes(self):
        rng = np.random.default_rng(12)
        cons = [{"type": "eq", "fun": lambda g: np.sum(g) - 1.0}]
        for _ in range(100):
            n = int(rng.integers(2, 9))
            f_prev = rng.dirichlet(np.ones(n))
            risk = rng.uniform(0.0, 1.0, size=n)
            eps = rng.uniform(0.2, 2.0)
            f = mtd_update(f_prev, risk, eps)
            nt.assert_allclose(np.sum(f), 1.0, rtol=1e-12)
            best = mtd_objective(f, f_prev, risk, eps)
            num = minimize(mtd_objective, f_prev,
                           args=(f_prev, risk, eps), method="SLSQP",
                           bounds=[(1e-12, 1.0)] * n, constraints=cons,
                           options={"ftol": 1e-12, "maxiter": 500})
            self.assertLessEqual(best, num.fun + 1e-7)
            nt.assert_allclose(f, num.x, atol=2e-3)
            # Adding a constant to every risk leaves the update unchanged.
            shifted = mtd_update(f_prev, risk + rng.uniform(-5.0, 5.0), eps)
            nt.assert_allclose(shifted, f, rtol=0.0, atol=1e-12)

    def test_horizon(self):
        state = MTDState(["a", "b", "c"], [1 / 3.0] * 3, [0.4, 0.1, 0.3],
                         0.5)
        res = mtd_plan_horizon(state, 1)
        nt.assert_allclose(res["distributions"][0], state.update())

        res = mtd_plan_horizon(state, 2)
        f1 = mtd_update(state.f, state.risk, 0.5)
        f2 = mtd_update(f1, state.risk, 0.5)
        nt.assert_allclose(res["distributions"][1], f2)
        self.assertEqual(len(res["stages"]), 2)

        single = MTDState(["only"], [1.0], [0.7], 1.0, alpha=0.5,
                          surface="s", psi={"s": 2.0})
        res = mtd_plan_horizon(single, 3)
        for f in res["distributions"]:
            nt.assert_allclose(f, [1.0])
        nt.assert_allclose(res["objective"], 3 * (0.7 + 0.5 * 2.0))

    def test_surfaces(self):
        state = MTDState(
            ["c0", "c1"], [0.5, 0.5],
            {"open": [0.9, 0.2], "closed": [0.1, 0.1]}, 1.0,
            surface="open",
            transition={"open": {"c0": "open", "c1": "closed"},
                        "closed": {"c0": "closed", "c1": "closed"}})
        res = mtd_plan_horizon(state, 3)
        self.assertEqual(len(res["surfaces"]), 3)
        nt.assert_allclose(sum(res["surfaces"][2].values()), 1.0)
        # Moving to c1 both lowers risk now and closes the surface.
        self.assertGreater(res["distributions"][0][1], 0.5)

        broken = MTDState(["c0", "c1"], [0.5, 0.5], [0.3, 0.2], 1.0,
                          surface="open",
                          transition={"open": {"c0": "open"}})
        with self.assertRaises(TransitionDomainError):
            mtd_plan_horizon(broken, 2)


class MPCTest(TestCase):

    def test_lq_one_step(self):
        model = scalar_linear(a=2.0, b=1.0, q_max=100.0)
        grid = np.linspace(-3.0, 3.0, 601)
        res = plan(model, HybridState(1.0), grid, QuadraticCost(ru=1.0), 1,
                   terminal_cost=lambda x, q: float(x[0] ** 2))
        nt.assert_allclose(res["action"], -1.0, atol=0.01)

        res = plan(model, HybridState(0.0), [-1.0, 0.0, 1.0],
                   QuadraticCost(ru=1.0), 2)
        self.assertEqual(res["action"], 0.0)
        self.assertEqual(res["n_sequences"], 9)
        self.assertEqual(
            receding_horizon_control(model, QuadraticCost(ru=1.0), 2,
                                     HybridState(0.0), [-1.0, 0.0, 1.0]),
            res["action"])
        with self.assertRaises(DomainError):
            plan(model, HybridState(0.0), [], QuadraticCost(), 1)

    def test_cvar_zero(self):
        model = scalar_linear(a=0.9, q_max=10.0)
        dist = DisturbanceProcess(natural={"kind": "normal", "std": 1.0},
                                  seed=5)
        kwargs = dict(disturbances=dist, n_samples=6)
        acts = [-1.0, -0.5, 0.0, 0.5]
        a = plan(model, HybridState(2.0), acts, QuadraticCost(ru=0.1), 2,
                 objective="expectation", **kwargs)
        b = plan(model, HybridState(2.0), acts, QuadraticCost(ru=0.1), 2,
                 objective="cvar", alpha=0.0, **kwargs)
        self.assertEqual(a["action"], b["action"])
        nt.assert_allclose(a["value"], b["value"])

    def test_closed_loop(self):
        model = slice_queue(lam0=2.0, mu=3.0, capacity=20.0)
        dist = DisturbanceProcess(attack=[0, 4, 4, 0, 0, 0],
                                  natural={"kind": "normal", "std": 0.2},
                                  seed=11)
        cost = ShortfallCost(model, action_cost={2.0: 0.05})
        traj, values = closed_loop(model, HybridState(2.0), 6, [0.0, 2.0],
                                   cost, 2, disturbances=dist, n_samples=3)
        self.assertEqual(traj.T, 6)
        self.assertEqual(len(values), 6)
        self.assertEqual(traj.w[:6], [0, 4, 4, 0, 0, 0])
        self.assertIn(traj.u[1], (0.0, 2.0))
        again, _ = closed_loop(model, HybridState(2.0), 6, [0.0, 2.0],
                               cost, 2, disturbances=dist, n_samples=3)
        nt.assert_array_equal(traj.Q, again.Q)


if __name__ == "__main__":
    unittest.main()
