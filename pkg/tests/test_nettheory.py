# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test random geometric graphs, percolation and SIS spreading.
"""

import os

import unittest
from unittest import TestCase

import networkx as nx
import numpy as np
import numpy.testing as nt

from ._helpers import create_outdir

from resilkit.core import DomainError, StepSizeError

from resilkit.nettheory import (sample_rgg, degree_stats,
                                largest_component_fraction, percolation_scan,
                                site_percolation, EpidemicModel, sis_simulate,
                                spectral_radius, algebraic_connectivity,
                                stability_indicators)


class GeometricGraphTest(TestCase):

    def setUp(self):
        fixture_name = os.path.splitext(os.path.basename(__file__))[0]
        self.outdir = create_outdir(fixture_name)

    def test_empty(self):
        net = sample_rgg(0.0, 10.0, 1.0, seed=1)
        self.assertEqual(net.n, 0)
        self.assertEqual(len(net.edges), 0)
        self.assertEqual(largest_component_fraction(net), 0.0)
        with self.assertRaises(DomainError):
            degree_stats(net)
        net = sample_rgg(1.0, 10.0, 0.0, seed=1)
        self.assertGreater(net.n, 0)
        self.assertEqual(len(net.edges), 0)
        with self.assertRaises(DomainError):
            sample_rgg(1.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            sample_rgg(-1.0, 10.0, 1.0)

    def test_degrees(self):
        net = sample_rgg(1.0, 30.0, 1.0, seed=42)
        self.assertAlmostEqual(net.theoretical_mean_degree, np.pi)
        stats = degree_stats(net)
        self.assertLess(abs(stats["mean"] - np.pi), 0.5)
        nt.assert_allclose(stats["pmf"][0], np.exp(-np.pi), rtol=1e-12)
        self.assertAlmostEqual(stats["pmf"][0], 0.0432, places=4)
        self.assertGreaterEqual(stats["dof"], 1)
        self.assertTrue(np.isfinite(stats["chi2"]))
        self.assertEqual(np.sum(stats["histogram"]), net.n)
        self.assertEqual(np.sum(net.degrees), 2 * len(net.edges))

        again = sample_rgg(1.0, 30.0, 1.0, seed=42)
        nt.assert_array_equal(net.points, again.points)
        nt.assert_array_equal(net.edges, again.edges)

    def test_poisson_degrees(self):
        rad = np.sqrt(0.5 / np.pi)
        means, accepted = list(), 0
        for seed in range(10):
            net = sample_rgg(1.0, 50.0, rad, seed=seed)
            self.assertGreaterEqual(net.n, 2000)
            stats = degree_stats(net)
            nt.assert_allclose(stats["theoretical_mean"], 0.5, rtol=1e-12)
            means.append(stats["mean"])
            if stats["p_value"] >= 0.01:
                accepted += 1
        self.assertGreaterEqual(accepted, 9)
        # Replicate runs carry the node-count fluctuation in their spread.
        stderr = np.std(means, ddof=1) / np.sqrt(len(means))
        self.assertLess(abs(np.mean(means) - 0.5), 3.0 * stderr)

    def test_classes(self):
        net = sample_rgg(None, 20.0, None, seed=3,
                         classes=[(0.5, 1.0), (0.2, 3.0)])
        self.assertIsNone(net.theoretical_mean_degree)
        self.assertIsNone(degree_stats(net)["pmf"])
        # Links never exceed the smaller radius of their ends.
        for i, j in net.edges:
            d = np.abs(net.points[i] - net.points[j])
            d = np.minimum(d, net.side - d)
            self.assertLessEqual(np.hypot(*d),
                                 min(net.radius[i], net.radius[j]) + 1e-12)
        wide = sample_rgg(0.1, 4.0, 3.0, seed=3)
        self.assertTrue(wide.degenerate)

    def test_edgelist(self):
        net = sample_rgg(1.0, 10.0, 1.0, seed=5)
        path = os.path.join(self.outdir, "rgg.edgelist")
        net.write_edgelist(path)
        with open(path, "r") as f:
            lines = [x for x in f.read().splitlines() if x.strip() != ""]
        self.assertEqual(len(lines), len(net.edges))


class PercolationTest(TestCase):

    def test_scan(self):
        res = percolation_scan([0.2, 2.0], 20.0, param="rad", lam=1.0,
                               samples=3, seed=8)
        frac = res["curve"]["mean_fraction"]
        self.assertLess(frac[0], 0.1)
        self.assertGreater(frac[1], 0.95)
        self.assertTrue(res["bracketed"])
        self.assertTrue(0.2 < res["threshold"] < 2.0)
        with self.assertRaises(DomainError):
            percolation_scan([2.0, 1.0], 10.0)
        with self.assertRaises(DomainError):
            percolation_scan([1.0], 10.0, param="side")

    def test_unbracketed(self):
        res = percolation_scan([1.5, 2.0], 10.0, samples=2, seed=1)
        self.assertFalse(res["bracketed"])
        self.assertTrue(np.isnan(res["threshold"]))

    def test_site(self):
        net = sample_rgg(1.0, 15.0, 2.0, seed=2)
        full = largest_component_fraction(net)
        res = site_percolation(net, np.linspace(0.0, 1.0, 6), samples=4,
                               seed=2)
        frac = res["curve"]["mean_fraction"]
        self.assertEqual(frac[0], 0.0)
        nt.assert_allclose(frac[-1], full)
        # Kept sets are nested along the grid.
        self.assertTrue(np.all(np.diff(frac) >= 0))
        with self.assertRaises(DomainError):
            site_percolation(net, [0.5, 1.5])


class SpreadingTest(TestCase):

    def setUp(self):
        self.k10 = nx.complete_graph(10)

    def test_spectral(self):
        ind = stability_indicators(self.k10, 0.01, 1.0)
        nt.assert_allclose(ind["rho"], 9.0, rtol=1e-6)
        nt.assert_allclose(ind["lambda2"], 10.0, rtol=1e-9)
        self.assertEqual(ind["mean_degree"], 9.0)
        nt.assert_allclose(ind["R0"], 0.09)
        self.assertEqual(ind["verdict"], "subcritical")
        self.assertEqual(stability_indicators(self.k10, 0.5, 1.0)["verdict"],
                         "supercritical")
        # Bipartite graphs still converge thanks to the shift.
        path = nx.to_scipy_sparse_array(nx.path_graph(2), dtype=float)
        nt.assert_allclose(spectral_radius(path), 1.0, rtol=1e-6)
        split = nx.Graph([(0, 1), (2, 3)])
        self.assertEqual(algebraic_connectivity(split), 0.0)
        with self.assertRaises(DomainError):
            stability_indicators(self.k10, 0.1, 0.0)

    def test_sis(self):
        model = EpidemicModel(0.01, 1.0, dt=0.1)
        res = sis_simulate(self.k10, model, 0.1, 2000)
        self.assertEqual(len(res["I"]), 2001)
        self.assertLess(res["I"][-1], 1e-3)

        # Without transmission infection decays geometrically.
        res = sis_simulate(self.k10, EpidemicModel(0.0, 1.0, dt=0.1), 0.5, 10)
        nt.assert_allclose(res["I"], 0.5 * 0.9 ** np.arange(11))

        # Above threshold the endemic level is 1 - mu / (beta k).
        res = sis_simulate(self.k10, EpidemicModel(0.5, 1.0, dt=0.1), 0.1,
                           500)
        nt.assert_allclose(res["I"][-1], 1.0 - 1.0 / 4.5, atol=1e-3)

        with self.assertRaises(StepSizeError):
            sis_simulate(self.k10, EpidemicModel(1.0, 1.0, dt=1.0), 0.1, 5)
        with self.assertRaises(StepSizeError):
            EpidemicModel(0.1, 1.0, dt=0.0)
        with self.assertRaises(DomainError):
            EpidemicModel(-0.1, 1.0)


if __name__ == "__main__":
    unittest.main()
