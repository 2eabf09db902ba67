# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test attack trees, cut sets and importance measures.
"""

import unittest
from collections import OrderedDict
from unittest import TestCase

import numpy as np
import numpy.testing as nt

from resilkit.core import DomainError, CapacityError, ValidationError

from resilkit.riskgraph import (SystemGraph, AttackTree, CutSetFamily,
                                mocus_cut_sets, brute_force_cut_sets,
                                structure_function, systemic_risk, exact_risk,
                                importance_measures, derivative_importance,
                                rank_mitigations, load_riskgraph)


def simple_tree():
    # top = OR(A, AND(B, C))
    return AttackTree("top", {
        "top": {"type": "OR", "inputs": ["A", "g"]},
        "g": {"type": "AND", "inputs": ["B", "C"]},
    })


def random_tree(rng):
    """AND/OR DAG with at most 12 distinct leaves and shared subtrees."""
    n_leaf = int(rng.integers(2, 13))
    pool = [str(i) for i in range(1, n_leaf + 1)]
    n_gate = int(rng.integers(1, 6))
    gates = OrderedDict()
    for i in range(n_gate):
        gates["g{}".format(i)] = {"type": str(rng.choice(["AND", "OR"])),
                                  "inputs": []}
    for i in range(1, n_gate):
        n_par = min(i, int(rng.integers(1, 3)))
        for p in rng.choice(i, size=n_par, replace=False):
            gates["g{}".format(p)]["inputs"].append("g{}".format(i))
    for spec in gates.values():
        k = min(n_leaf, int(rng.integers(1, 4)))
        spec["inputs"] += [str(v) for v in rng.choice(pool, size=k,
                                                       replace=False)]
    return AttackTree("g0", gates)


class CutSetTest(TestCase):

    def test_mocus(self):
        W = mocus_cut_sets(simple_tree())
        self.assertEqual(W, CutSetFamily([["A"], ["B", "C"]]))
        self.assertEqual(W.to_list(), [["A"], ["B", "C"]])
        self.assertTrue(structure_function(W, ["B", "C"]))
        self.assertFalse(structure_function(W, ["B"]))

    def test_absorption(self):
        tree = AttackTree("top", {
            "top": {"type": "OR", "inputs": ["A", "g"]},
            "g": {"type": "AND", "inputs": ["A", "B"]},
        })
        self.assertEqual(mocus_cut_sets(tree).to_list(), [["A"]])
        with self.assertRaises(DomainError):
            CutSetFamily([["A"], ["A", "B"]])
        with self.assertRaises(DomainError):
            CutSetFamily([[]])

    def test_bruteforce(self):
        tree = AttackTree("top", {
            "top": {"type": "AND", "inputs": ["g1", "g2"]},
            "g1": {"type": "OR", "inputs": ["1", "2", "g3"]},
            "g2": {"type": "OR", "inputs": ["3", "g3"]},
            "g3": {"type": "AND", "inputs": ["4", "5"]},
        })
        W = mocus_cut_sets(tree)
        self.assertEqual(W, brute_force_cut_sets(tree))
        self.assertEqual(W, CutSetFamily([["1", "3"], ["2", "3"],
                                          ["4", "5"]]))

    def test_bruteforce_random(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            tree = random_tree(rng)
            self.assertLessEqual(len(tree.nodes), 12)
            self.assertEqual(mocus_cut_sets(tree), brute_force_cut_sets(tree))

    def test_tree_errors(self):
        with self.assertRaises(ValidationError):
            AttackTree("top", {"g": {"type": "OR", "inputs": ["a"]}})
        with self.assertRaises(ValidationError):
            AttackTree("top", {"top": {"type": "XOR", "inputs": ["a"]}})
        with self.assertRaises(ValidationError):
            AttackTree("top", {
                "top": {"type": "OR", "inputs": ["g"]},
                "g": {"type": "AND", "inputs": ["top"]},
            })
        with self.assertRaises(ValidationError) as ctx:
            AttackTree("top", {"top": {"type": "OR", "inputs": []},
                               "lost": {"type": "OR", "inputs": ["a"]}})
        self.assertEqual(len(ctx.exception.errors), 3)


class RiskTest(TestCase):

    def test_systemic(self):
        half = {"1": 0.5, "2": 0.5, "3": 0.5}
        nt.assert_allclose(systemic_risk([["1"], ["2"]], half), 0.75)
        nt.assert_allclose(systemic_risk([["1", "2"]], half), 0.25)
        nt.assert_allclose(exact_risk([["1", "2"]], half), 0.25)
        # Overlapping cut sets are not independent.
        W = [["1", "2"], ["1", "3"]]
        nt.assert_allclose(systemic_risk(W, half), 0.4375)
        nt.assert_allclose(exact_risk(W, half), 0.375)
        with self.assertRaises(DomainError):
            systemic_risk(W, {"1": 0.5, "2": 0.5})
        with self.assertRaises(DomainError):
            systemic_risk([["1"]], {"1": 1.5})

    def test_extremes(self):
        W = [["1"], ["2", "3"]]
        self.assertEqual(systemic_risk(W, {"1": 0, "2": 0, "3": 0}), 0.0)
        self.assertEqual(systemic_risk(W, {"1": 1, "2": 0, "3": 0}), 1.0)
        self.assertEqual(exact_risk([], {}), 0.0)
        many = [[str(i)] for i in range(23)]
        with self.assertRaises(CapacityError):
            exact_risk(many, {str(i): 0.1 for i in range(23)})

    def test_importance(self):
        rs = importance_measures([["1", "2"]], {"1": 0.3, "2": 0.5})
        row = rs[0]
        self.assertEqual(row["node"], "1")
        nt.assert_allclose(row["BI"], 0.5)
        nt.assert_allclose(row["IP"], 0.15)
        nt.assert_allclose(row["RI"], 0.15)

        W = [["1"], ["2"]]
        r = {"2": 0.1, "1": 0.9}
        ranked = rank_mitigations(W, r)
        self.assertEqual(list(ranked["node"]), ["1", "2"])
        nt.assert_allclose(ranked["RI"], [0.81, 0.01])
        self.assertEqual(len(rank_mitigations(W, r, top_k=10)), 2)
        self.assertEqual(len(rank_mitigations(W, r, top_k=1)), 1)
        with self.assertRaises(DomainError):
            rank_mitigations(W, r, top_k=0)
        # With every node in one cut set the derivative is the Birnbaum
        # importance.
        d = derivative_importance(W, r)
        nt.assert_allclose([d["1"], d["2"]],
                           importance_measures(W, r)["BI"])

    def test_ties(self):
        ranked = rank_mitigations([["10"], ["2"]], {"10": 0.5, "2": 0.5})
        self.assertEqual(list(ranked["node"]), ["2", "10"])


class DependencyTest(TestCase):

    def test_propagation(self):
        system = SystemGraph(
            [1, 2, {"id": 3, "role": "supplier"}, {"id": 4, "parent": 1}],
            edges=[(3, 1)])
        self.assertEqual(system.role(3), "supplier")
        self.assertEqual(system.upstream(1), {"3", "4"})
        tree = AttackTree("top", {"top": {"type": "AND",
                                          "inputs": ["1", "2"]}},
                          system=system)
        wide = tree.with_dependencies()
        W = mocus_cut_sets(wide)
        self.assertEqual(W, CutSetFamily([["1", "2"], ["3", "2"],
                                          ["4", "2"]]))
        self.assertEqual(W, brute_force_cut_sets(wide))
        with self.assertRaises(DomainError):
            AttackTree("top", {"top": {"type": "OR",
                                      "inputs": ["1"]}}).with_dependencies()

    def test_graph_errors(self):
        with self.assertRaises(ValidationError) as ctx:
            SystemGraph([1, 1, {"id": 2, "role": "vendor"}],
                        edges=[(1, 9)])
        self.assertEqual(len(ctx.exception.errors), 3)
        with self.assertRaises(ValidationError):
            SystemGraph([{"id": 1, "parent": 7}])
        system = SystemGraph([1, 2])
        with self.assertRaises(ValidationError):
            AttackTree("top", {"top": {"type": "OR", "inputs": ["5"]}},
                       system=system)

    def test_load(self):
        tree, system, r = load_riskgraph({
            "system": {"nodes": [1, 2, 3], "edges": [[3, 2]]},
            "tree": {"root": "top",
                     "gates": {"top": {"type": "OR",
                                       "inputs": ["a", "2"]}},
                     "leaves": {"a": 1}},
            "risk": {"1": 0.2, "2": 0.1, "3": 0.5},
            "propagate_dependencies": True,
        })
        W = mocus_cut_sets(tree)
        self.assertEqual(W, CutSetFamily([["1"], ["2"], ["3"]]))
        nt.assert_allclose(systemic_risk(W, r), 1 - 0.8 * 0.9 * 0.5)


if __name__ == "__main__":
    unittest.main()
