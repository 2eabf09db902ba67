# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test resilience, service and cost metrics.
"""

import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as nt

from resilkit.core import Trajectory, DomainError

from resilkit.metrics import (MetricsConfig, DisruptionEvents,
                              resilience_loss, detect_events,
                              temporal_metrics, service_metrics,
                              slice_isolation, autoscaling_efficiency,
                              composite_index, cost_resilience,
                              aggregate_metrics, metrics_report)


class MetricsTest(TestCase):

    def setUp(self):
        self.Q = [100, 100, 50, 75, 100]
        self.traj = Trajectory.from_performance(self.Q, 100)

    def test_resilience_loss(self):
        self.assertAlmostEqual(resilience_loss(self.traj, (2, 4)), 0.75)
        flat = Trajectory.from_performance([7.0] * 5, 7.0)
        self.assertEqual(resilience_loss(flat), 0.0)
        down = Trajectory.from_performance([0.0] * 3, 1.0)
        self.assertEqual(resilience_loss(down), 3.0)
        with self.assertRaises(DomainError):
            resilience_loss(self.traj, (3, 2))
        with self.assertRaises(DomainError):
            resilience_loss(self.traj, (0, 5))

    def test_unit_cost_equals_loss(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            T = int(rng.integers(1, 40))
            q_max = rng.uniform(1.0, 100.0)
            traj = Trajectory.from_performance(
                rng.uniform(0.0, q_max, size=T + 1), q_max)
            t0 = int(rng.integers(0, T + 1))
            t1 = int(rng.integers(t0, T + 1))
            for window in (None, (t0, t1)):
                nt.assert_allclose(cost_resilience(traj, 1.0, window),
                                   resilience_loss(traj, window),
                                   rtol=0.0, atol=1e-12)
            L = resilience_loss(traj)
            self.assertTrue(0.0 <= L <= T + 1)

    def test_temporal(self):
        cfg = MetricsConfig(delta=0.8)
        ev = DisruptionEvents([(2, 3, 4)])
        tm = temporal_metrics(self.traj, ev, cfg)
        self.assertEqual(tm["downtime"], [2])
        self.assertEqual(tm["MTTD"], 1.0)
        self.assertEqual(tm["MTTR"], 1.0)
        self.assertEqual(tm["M"], 50.0)
        self.assertEqual(tm["D"], 0.0)
        self.assertFalse(tm["mttf_defined"])
        self.assertTrue(np.isnan(tm["MTTF"]))

        flat = Trajectory.from_performance([100] * 5, 100)
        tm = temporal_metrics(flat, DisruptionEvents([(2, 2, 2)]), cfg)
        self.assertEqual(tm["downtime"], [0])
        for key in ("MTTD", "MTTR", "M", "D"):
            self.assertEqual(tm[key], 0.0)

        Q = [100] * 12
        Q[2], Q[9] = 50, 50
        tr = Trajectory.from_performance(Q, 100)
        tm = temporal_metrics(tr, DisruptionEvents([(2, 2, 4), (9, 9, 10)]),
                              cfg)
        self.assertTrue(tm["mttf_defined"])
        self.assertEqual(tm["MTTF"], 5.0)

    def test_events(self):
        with self.assertRaises(DomainError):
            DisruptionEvents([(3, 2, 4)])
        with self.assertRaises(DomainError):
            DisruptionEvents([(1, 2, 5), (4, 6, 7)])
        ev = detect_events(self.traj, delta=0.8, stabilization=1)
        self.assertEqual(list(ev), [(2, 2, 4)])
        # A shallow dip that never crosses delta is not an event.
        shallow = Trajectory.from_performance([100, 90, 100, 100], 100)
        self.assertEqual(len(detect_events(shallow, delta=0.8)), 0)

    def test_service(self):
        cfg = MetricsConfig(q_sla=50, q_avail=50, l_max=10)
        tr = Trajectory.from_performance([100, 40, 90], 100)
        full = Trajectory.from_performance([100, 100, 100], 100)
        sm = service_metrics([tr, full], [5, 15, 5], cfg)
        self.assertEqual(sm["SII"], 1.0)
        self.assertFalse(sm["single_slice"])
        nt.assert_allclose(sm["Lambda"], 2.0 / 3.0)
        nt.assert_allclose(sm["V_SLA"], 1.0 / 3.0)
        nt.assert_allclose(sm["A"], 2.0 / 3.0)
        sii, single = slice_isolation([tr], 0)
        self.assertEqual(sii, 1.0)
        self.assertTrue(single)
        with self.assertRaises(DomainError):
            service_metrics([tr, full], [5, 15], cfg)

    def test_autoscaling(self):
        self.assertEqual(autoscaling_efficiency([1, 2, 3], [1, 2, 3]), 1.0)
        self.assertEqual(autoscaling_efficiency([0, 0], [1, 1]), 0.0)
        self.assertEqual(autoscaling_efficiency([2, 2], [1, 1]), -1.0)
        with self.assertRaises(DomainError):
            autoscaling_efficiency([1, 1], [0, 0])

    def test_aggregate(self):
        nt.assert_allclose(composite_index([0.2, 0.4], [0.5, 0.5]), 0.3)
        nt.assert_allclose(composite_index({"a": 0.6, "b": 0.6},
                                           {"a": 0.25, "b": 0.75}), 0.6)
        with self.assertRaises(DomainError):
            composite_index([0.2, 0.4, 0.1], [0.5, 0.5])
        tr = Trajectory.from_performance([50, 75, 100], 100)
        nt.assert_allclose(cost_resilience(tr, 2.0), 1.5)

    def test_config(self):
        self.assertEqual(MetricsConfig().problems(), [])
        cfg = MetricsConfig(delta=1.5, q_sla=200, weights={"L": 0.7})
        errs = cfg.problems(q_max=100)
        self.assertEqual(len(errs), 3)
        with self.assertRaises(DomainError):
            cfg.check(100)

    def test_report(self):
        cfg = MetricsConfig(delta=0.8, q_sla=60, q_avail=50)
        summary, events, flags = metrics_report(
            self.traj, cfg, events=DisruptionEvents([(2, 3, 4)]))
        vals = dict(zip(summary["metric"], summary["value"]))
        self.assertAlmostEqual(vals["L"], 0.75)
        self.assertEqual(vals["downtime"], 2.0)
        self.assertEqual(vals["M"], 50.0)
        nt.assert_allclose(vals["V_SLA"], 0.2)
        nt.assert_allclose(vals["A"], 1.0)
        self.assertNotIn("MTTF", vals)
        self.assertEqual(len(events), 1)
        self.assertTrue(flags["single_slice"])
        self.assertFalse(flags["mttf_defined"])

        cfg = MetricsConfig(weights={"L": 0.5, "eta_scale": 0.5}, cost=2.0)
        summary, _, _ = metrics_report(
            self.traj, cfg, events=DisruptionEvents([(2, 3, 4)]),
            allocated=[1, 1, 1, 1, 1], optimal=[1, 1, 1, 1, 1])
        vals = dict(zip(summary["metric"], summary["value"]))
        nt.assert_allclose(vals["R_composite"], 0.5 * 0.75 + 0.5 * 1.0)
        nt.assert_allclose(vals["C_resilience"], 1.5)

        out = aggregate_metrics({"L": 0.75, "eta_scale": 1.0}, cfg)
        nt.assert_allclose(out["R_composite"], 0.875)
        self.assertNotIn("C_resilience", out)
        with self.assertRaises(DomainError):
            aggregate_metrics({"L": 0.75}, cfg)


if __name__ == "__main__":
    unittest.main()
