# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test hybrid dynamics, rollouts, random streams and result tables.
"""

import os

import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as nt

from ._helpers import create_outdir

from resilkit.core import (HybridState, Trajectory, DisturbanceProcess,
                           ResultSet, simulate_step, rollout, build_model,
                           SequencePolicy, TabularPolicy, LinearFeedback,
                           ModelMismatchError, PolicyDomainError, DomainError)

from resilkit.core.models import (scalar_linear, identity_model, slice_queue,
                                  backhaul_capacity, switched_linear, tabular)

from resilkit.core import streams


class DynamicsTest(TestCase):

    def setUp(self):
        fixture_name = os.path.splitext(os.path.basename(__file__))[0]
        self.outdir = create_outdir(fixture_name)

    def test_simulate_step(self):
        model = scalar_linear(a=0.5, q_max=8.0)
        s = simulate_step(model, HybridState(8.0))
        nt.assert_allclose(s.x, [4.0])
        self.assertEqual(s.q, "normal")

        queue = slice_queue(lam0=2.0, mu=4.0, threshold=10.0)
        s = simulate_step(queue, HybridState(5.0), w=3.0)
        nt.assert_allclose(s.x, [6.0])
        s = simulate_step(queue, HybridState(12.0))
        self.assertEqual(s.q, "overload")

    def test_dimension_mismatch(self):
        model = switched_linear({"normal": np.eye(2)}, B=[[1.0], [0.0]])
        with self.assertRaises(ModelMismatchError):
            simulate_step(model, HybridState([1.0, 2.0, 3.0]))
        with self.assertRaises(ModelMismatchError):
            simulate_step(model, HybridState([1.0, 2.0], "attack"))

    def test_rollout(self):
        model = scalar_linear(a=0.5, q_max=8.0)
        traj = rollout(model, None, None, None, HybridState(8.0), 3)
        nt.assert_allclose(traj.Q, [8.0, 4.0, 2.0, 1.0])
        self.assertEqual(traj.T, 3)
        # Inputs at the final record are never applied.
        self.assertIsNone(traj.u[-1])
        rs = traj.to_resultset()
        self.assertTrue(np.isnan(rs["u"][-1]))
        traj.check(model)

        hold = identity_model(dim=2, q_max=5.0)
        s0 = HybridState([3.0, 1.0])
        traj = rollout(hold, 1.0, 2.0, None, s0, 7)
        for t in range(len(traj)):
            self.assertEqual(traj.state(t), s0)

        queue = slice_queue(lam0=2.0, mu=4.0)
        traj = rollout(queue, None, 3.0, None, HybridState(0.0), 3)
        nt.assert_allclose(traj.x[:, 0], [0.0, 1.0, 2.0, 3.0])
        self.assertEqual(traj.q[1:], ["attack"] * 3)

    def test_rollout_errors(self):
        model = scalar_linear()
        with self.assertRaises(DomainError):
            rollout(model, None, None, None, HybridState(1.0), 0)
        with self.assertRaises(DomainError):
            rollout(model, None, [1.0, 1.0], None, HybridState(1.0), 3)
        pol = TabularPolicy({"attack": 1.0})
        with self.assertRaises(PolicyDomainError):
            rollout(model, pol, None, None, HybridState(1.0), 2)
        with self.assertRaises(PolicyDomainError):
            SequencePolicy([0.0])(HybridState(0.0), 1)

    def test_backhaul(self):
        model = backhaul_capacity(b_max=10.0, cut_drop=5.0)
        cuts = DisturbanceProcess(natural={"kind": "fixed",
                                           "values": [1, 0, 1, 1]})
        traj = rollout(model, None, None, cuts, HybridState(10.0), 4)
        nt.assert_allclose(traj.Q, [10.0, 5.0, 5.0, 0.0, 0.0])
        self.assertEqual(traj.q, ["normal", "degraded", "degraded",
                                  "partitioned", "partitioned"])
        # Repair is clipped at the nominal capacity.
        traj = rollout(model, 4.0, None, None, HybridState(8.0), 2)
        nt.assert_allclose(traj.Q, [8.0, 10.0, 10.0])

    def test_linear_feedback(self):
        pol = LinearFeedback([[2.0]], low=-1.0, high=1.0)
        self.assertEqual(pol(HybridState(0.25), 0), -0.5)
        self.assertEqual(pol(HybridState(3.0), 0), -1.0)

    def test_tabular_model(self):
        model = build_model({
            "kind": "tabular", "modes": ["normal", "attack"],
            "A": {"normal": 1.0, "attack": 1.0},
            "c": {"normal": 0.0, "attack": -1.0},
            "rules": [{"from": "normal", "to": "attack", "var": "w",
                       "op": ">", "value": 0.5}],
            "q_max": 10.0, "lower": 0.0,
        })
        traj = rollout(model, None, [1.0, 0.0, 0.0], None,
                       HybridState(5.0), 3)
        self.assertEqual(traj.q, ["normal", "attack", "attack", "attack"])
        nt.assert_allclose(traj.x[:, 0], [5.0, 6.0, 5.0, 4.0])
        with self.assertRaises(ModelMismatchError):
            tabular(["normal"], {"normal": 1.0},
                    rules=[{"to": "overload", "value": 1.0}])
        with self.assertRaises(DomainError):
            build_model({"kind": "warp_drive"})

    def test_streams(self):
        a = streams.generator(12, "natural", 5).random(4)
        b = streams.generator(12, "natural", 5).random(4)
        c = streams.generator(12, "natural", 6).random(4)
        d = streams.generator(12, "attack", 5).random(4)
        nt.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))
        self.assertFalse(np.array_equal(a, d))

        proc = DisturbanceProcess(natural={"kind": "normal", "std": 2.0},
                                  seed=3)
        path = proc.natural_path(20)
        # Any step regenerates in isolation.
        self.assertEqual(proc.natural_at(13), path[13])
        other = proc.with_stream("other")
        self.assertNotEqual(other.natural_at(13), path[13])
        with self.assertRaises(DomainError):
            DisturbanceProcess(natural={"kind": "cauchy"})

    def test_trajectory_bounds(self):
        with self.assertRaises(DomainError):
            Trajectory.from_performance([1.0, 2.0, 3.0], 2.0)
        traj = Trajectory.from_performance([100, 50, 100], 100)
        nt.assert_allclose(traj.shortfall(), [0.0, 0.5, 0.0])

    def test_resultset(self):
        rs = ResultSet(["metric", "value"])
        rs.append({"metric": "L", "value": 0.75})
        rs.append({"metric": "M", "value": 1.0 / 3.0})
        self.assertEqual(len(rs), 2)
        nt.assert_allclose(rs["value"], [0.75, 1.0 / 3.0])
        self.assertEqual(rs[0]["metric"], "L")
        text = rs.to_csv()
        self.assertEqual(text.splitlines()[0], "metric,value")
        self.assertEqual(text.splitlines()[2], "M,0.333333333333")
        outpath = os.path.join(self.outdir, "resultset.csv")
        with open(outpath, "w") as f:
            f.write(text)

        with self.assertRaises(ValueError):
            rs.append({"metric": "D"})
        with self.assertRaises(KeyError):
            rs["nope"]
        rs.extend(rs[:1])
        self.assertEqual(len(rs), 3)
        self.assertEqual(len(rs.distinct()), 2)
        rs.merge(ResultSet(["unit"], [("-",), ("-",), ("s",)]))
        self.assertEqual(rs.keys, ["metric", "value", "unit"])
        arr = rs.asarray()
        nt.assert_allclose(arr["value"], [0.75, 1.0 / 3.0, 0.75])
        self.assertIsNone(ResultSet(["x"], [(np.nan,)]).to_records()[0]["x"])


if __name__ == "__main__":
    unittest.main()
