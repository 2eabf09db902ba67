# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Attack trees, system graphs and cut-set risk analytics.

An attack tree is a rooted DAG of AND/OR gates whose leaves refer to
nodes of a system graph (components and suppliers).  The tree induces a
monotone structure function which is summarized by its family of minimal
cut sets.  Given per-node compromise probabilities r, systemic risk is

    R(r) = 1 - prod_{w in W} (1 - prod_{v in w} r_v),

which treats cut sets as independent.  :func:`exact_risk` enumerates all
node states to measure the error of that approximation on small systems.

"""

import itertools
import logging
from collections import OrderedDict

import networkx as nx
import numpy as np

from .core.errors import CapacityError, DomainError, ValidationError
from .core.resultset import ResultSet

logger = logging.getLogger(__name__)

#: Largest number of distinct nodes for exhaustive enumeration.
ENUMERATION_LIMIT = 22

gate_types = ("AND", "OR")


def node_key(v):
    """Sort key ordering numeric ids numerically, then other ids."""
    s = str(v)
    try:
        return (0, int(s), s)
    except ValueError:
        return (1, 0, s)


class SystemGraph(object):
    """Directed dependency graph over components and suppliers.

    An edge (u, v) means that compromise of u propagates to v.  A node with
    a ``parent`` field is a subcomponent; it becomes a dependency of the
    parent.

    Args:
        nodes (list): Node ids, or dicts with ``id`` and optional ``role``
            ("component" or "supplier") and ``parent``.
        edges (list): (u, v) pairs.

    """

    def __init__(self, nodes, edges=()):
        errs = list()
        self.graph = nx.DiGraph()
        parents = list()
        for n in nodes:
            if isinstance(n, dict):
                nid = str(n["id"])
                role = n.get("role", "component")
                parent = n.get("parent", None)
            else:
                nid, role, parent = str(n), "component", None
            if nid in self.graph:
                errs.append("duplicate system node {!r}".format(nid))
            if role not in ("component", "supplier"):
                errs.append("node {!r} has unknown role {!r}".format(
                    nid, role))
            self.graph.add_node(nid, role=role)
            if parent is not None:
                parents.append((nid, str(parent)))
        for u, v in edges:
            for x in (u, v):
                if str(x) not in self.graph:
                    errs.append("edge ({}, {}) references unknown node "
                                "{!r}".format(u, v, x))
            self.graph.add_edge(str(u), str(v))
        for child, parent in parents:
            if parent not in self.graph:
                errs.append("node {!r} has unknown parent {!r}".format(
                    child, parent))
            self.graph.add_edge(child, parent)
        if len(errs) > 0:
            raise ValidationError(errs)

    @property
    def nodes(self):
        return list(self.graph.nodes)

    def role(self, v):
        return self.graph.nodes[str(v)]["role"]

    def upstream(self, v):
        """All nodes whose compromise reaches v."""
        return nx.ancestors(self.graph, str(v))


class AttackTree(object):
    """AND/OR attack tree.

    Args:
        root (str): Root gate id.
        gates (dict): Gate id to ``{"type": "AND"|"OR", "inputs": [...]}``.
        leaves (dict, optional): Leaf id to system node id.  Leaves not in
            the table refer to the node with the same id.
        system (SystemGraph, optional): Graph that leaves must refer to.

    """

    def __init__(self, root, gates, leaves=None, system=None):
        self.root = str(root)
        self.gates = OrderedDict()
        for g, spec in gates.items():
            children = spec.get("inputs", spec.get("children", []))
            self.gates[str(g)] = OrderedDict(
                type=str(spec.get("type", "")).upper(),
                inputs=[str(c) for c in children])
        self.leaves = dict() if leaves is None else {
            str(k): str(v) for k, v in leaves.items()}
        self.system = system
        errs = self.problems()
        if len(errs) > 0:
            raise ValidationError(errs)

    def _graph(self):
        g = nx.DiGraph()
        g.add_node(self.root)
        for gid, spec in self.gates.items():
            g.add_node(gid)
            for c in spec["inputs"]:
                g.add_edge(gid, c)
        return g

    def problems(self):
        errs = list()
        if self.root not in self.gates:
            errs.append("root {!r} is not a gate".format(self.root))
        for gid, spec in self.gates.items():
            if spec["type"] not in gate_types:
                errs.append("gate {!r} has type {!r}, expected AND or "
                            "OR".format(gid, spec["type"]))
            if len(spec["inputs"]) == 0:
                errs.append("gate {!r} has no inputs".format(gid))
        g = self._graph()
        if not nx.is_directed_acyclic_graph(g):
            errs.append("attack tree contains a cycle")
            return errs
        roots = [v for v in g.nodes if g.in_degree(v) == 0]
        if roots != [self.root] and sorted(roots) != [self.root]:
            errs.append("attack tree must have the single root {!r}, found "
                        "{}".format(self.root, sorted(roots)))
        unreachable = set(self.gates) - {self.root} - \
            nx.descendants(g, self.root)
        if len(unreachable) > 0:
            errs.append("gates unreachable from root: {}".format(
                sorted(unreachable)))
        for leaf in self.leaf_ids():
            if leaf in self.gates:
                continue
            node = self.node_of(leaf)
            if self.system is not None and node not in self.system.graph:
                errs.append("leaf {!r} maps to unknown system node "
                            "{!r}".format(leaf, node))
        return errs

    def leaf_ids(self):
        out = list()
        for spec in self.gates.values():
            for c in spec["inputs"]:
                if c not in self.gates and c not in out:
                    out.append(c)
        return out

    def node_of(self, leaf):
        return self.leaves.get(leaf, leaf)

    @property
    def nodes(self):
        """System nodes referenced by the leaves, in id order."""
        return sorted({self.node_of(v) for v in self.leaf_ids()},
                      key=node_key)

    def evaluate(self, failed):
        """Structure function: does the set of failed nodes reach the root?"""
        failed = {str(v) for v in failed}
        memo = dict()

        def ev(x):
            if x not in self.gates:
                return self.node_of(x) in failed
            if x not in memo:
                vals = [ev(c) for c in self.gates[x]["inputs"]]
                memo[x] = all(vals) if self.gates[x]["type"] == "AND" \
                    else any(vals)
            return memo[x]

        return ev(self.root)

    def with_dependencies(self, system=None):
        """Widen every leaf to OR(node, upstream nodes of the system graph).
        """
        system = self.system if system is None else system
        if system is None:
            raise DomainError("dependency expansion needs a system graph")
        gates = OrderedDict((g, dict(s)) for g, s in self.gates.items())
        leaves = dict()
        for leaf in self.leaf_ids():
            node = self.node_of(leaf)
            up = sorted(system.upstream(node), key=node_key)
            if len(up) == 0:
                leaves[leaf] = node
                continue
            dep = "dep:{}".format(leaf)
            gates[dep] = dict(type="OR", inputs=["node:{}".format(v)
                                                 for v in [node] + up])
            for v in [node] + up:
                leaves["node:{}".format(v)] = v
            for g, spec in gates.items():
                if g != dep:
                    spec["inputs"] = [dep if c == leaf else c
                                      for c in spec["inputs"]]
        return AttackTree(self.root, gates, leaves=leaves, system=system)

    @classmethod
    def from_dict(cls, data, system=None):
        return cls(data["root"], data["gates"], leaves=data.get("leaves"),
                   system=system)


class CutSetFamily(object):
    """Antichain of nonempty node sets."""

    def __init__(self, sets):
        fam = list()
        for s in sets:
            fs = frozenset(str(v) for v in s)
            if len(fs) == 0:
                raise DomainError("cut sets must be nonempty")
            if fs not in fam:
                fam.append(fs)
        for a, b in itertools.permutations(fam, 2):
            if a < b:
                raise DomainError("cut set {} contains cut set {}".format(
                    sorted(b, key=node_key), sorted(a, key=node_key)))
        self.sets = sorted(fam, key=lambda s: (len(s), sorted(
            node_key(v) for v in s)))

    @property
    def nodes(self):
        return sorted(set().union(*self.sets), key=node_key) if \
            len(self.sets) > 0 else list()

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __eq__(self, other):
        if not isinstance(other, CutSetFamily):
            other = CutSetFamily(other)
        return set(self.sets) == set(other.sets)

    def to_list(self):
        return [sorted(s, key=node_key) for s in self.sets]

    def __repr__(self):
        return "CutSetFamily({})".format(self.to_list())


def _minimal(sets):
    """Absorb supersets and duplicates."""
    uniq = sorted(set(sets), key=len)
    out = list()
    for s in uniq:
        if not any(m <= s for m in out):
            out.append(s)
    return out


def mocus_cut_sets(tree):
    """Minimal cut sets by top-down gate expansion.

    Rows start as ``[[root]]``; an OR gate in a row is replaced by one row
    per input and an AND gate by all its inputs in the same row.  Once no
    row holds a gate, leaves are mapped to system nodes and the rows are
    reduced by absorption.

    Returns:
        (CutSetFamily): The minimal cut sets.

    """
    rows = [(tree.root,)]
    done = list()
    while len(rows) > 0:
        row = rows.pop()
        gate = None
        for x in row:
            if x in tree.gates:
                gate = x
                break
        if gate is None:
            done.append(frozenset(tree.node_of(x) for x in row))
            continue
        rest = tuple(x for x in row if x != gate)
        spec = tree.gates[gate]
        if spec["type"] == "AND":
            rows.append(rest + tuple(spec["inputs"]))
        else:
            for c in spec["inputs"]:
                rows.append(rest + (c,))
    fam = _minimal(done)
    logger.debug("mocus: {} rows reduced to {} minimal cut sets".format(
        len(done), len(fam)))
    return CutSetFamily(fam)


def structure_function(W, failed):
    """True when some cut set is contained in the failed set."""
    failed = {str(v) for v in failed}
    return any(w <= failed for w in _family(W))


def brute_force_cut_sets(tree):
    """Minimal cut sets by enumerating every subset of the tree's nodes.

    Only usable up to ``ENUMERATION_LIMIT`` nodes.

    """
    nodes = tree.nodes
    if len(nodes) > ENUMERATION_LIMIT:
        raise CapacityError("{} nodes exceed the enumeration limit of "
                            "{}".format(len(nodes), ENUMERATION_LIMIT))
    cuts = list()
    for k in range(1, len(nodes) + 1):
        for combo in itertools.combinations(nodes, k):
            s = frozenset(combo)
            if any(c <= s for c in cuts):
                continue
            if tree.evaluate(s):
                cuts.append(s)
    return CutSetFamily(cuts)


def _family(W):
    if isinstance(W, CutSetFamily):
        return W.sets
    return CutSetFamily(W).sets


def _risk_vector(r):
    out = dict()
    for k, v in dict(r).items():
        v = float(v)
        if not (0.0 <= v <= 1.0):
            raise DomainError("risk of node {!r} is {} outside [0, 1]".format(
                k, v))
        out[str(k)] = v
    return out


def _check_covered(fam, r):
    missing = sorted({v for w in fam for v in w} - set(r), key=node_key)
    if len(missing) > 0:
        raise DomainError("no risk value for nodes {}".format(missing))


def systemic_risk(W, r):
    """R(r) = 1 - prod_w (1 - prod_{v in w} r_v).

    Args:
        W (CutSetFamily): Cut sets (or a list of node sets).
        r (dict): Node id to compromise probability.

    Returns:
        (float): R in [0, 1].

    """
    fam = _family(W)
    r = _risk_vector(r)
    _check_covered(fam, r)
    surv = 1.0
    for w in fam:
        surv *= 1.0 - float(np.prod([r[v] for v in w]))
    return 1.0 - surv


def exact_risk(W, r):
    """Exact probability that some cut set fails, nodes independent.

    Enumerates all 2^n node states, so n is limited to
    ``ENUMERATION_LIMIT``; use :func:`systemic_risk` beyond that.

    """
    fam = _family(W)
    r = _risk_vector(r)
    _check_covered(fam, r)
    nodes = sorted({v for w in fam for v in w}, key=node_key)
    n = len(nodes)
    if n > ENUMERATION_LIMIT:
        raise CapacityError("{} nodes exceed the enumeration limit of {}; "
                            "use systemic_risk".format(n, ENUMERATION_LIMIT))
    if n == 0:
        return 0.0
    idx = np.arange(2 ** n, dtype=np.int64)
    prob = np.ones(2 ** n)
    for k, v in enumerate(nodes):
        bit = (idx >> k) & 1
        prob *= np.where(bit == 1, r[v], 1.0 - r[v])
    pos = {v: k for k, v in enumerate(nodes)}
    fails = np.zeros(2 ** n, dtype=bool)
    for w in fam:
        mask = 0
        for v in w:
            mask |= 1 << pos[v]
        fails |= (idx & mask) == mask
    return float(np.sum(prob[fails]))


def _with(r, v, value):
    out = dict(r)
    out[v] = value
    return out


def importance_measures(W, r, risk=systemic_risk):
    """Improvement potential, Birnbaum and risk importance per node.

    IP_v = R(r) - R(r_v=0), BI_v = R(r_v=1) - R(r_v=0) and RI_v = r_v BI_v.

    Args:
        W (CutSetFamily): Cut sets.
        r (dict): Node risks; every node in r gets a row.
        risk (callable): Risk function, default :func:`systemic_risk`.

    Returns:
        (ResultSet): Columns node, r, IP, BI, RI in node id order.

    """
    fam = _family(W)
    r = _risk_vector(r)
    _check_covered(fam, r)
    base = risk(fam, r)
    rs = ResultSet(["node", "r", "IP", "BI", "RI"])
    for v in sorted(r, key=node_key):
        r0 = risk(fam, _with(r, v, 0.0))
        r1 = risk(fam, _with(r, v, 1.0))
        bi = r1 - r0
        rs.rows.append((v, r[v], base - r0, bi, r[v] * bi))
    return rs


def derivative_importance(W, r):
    """Analytic partial derivatives dR/dr_v of the systemic risk formula."""
    fam = _family(W)
    r = _risk_vector(r)
    _check_covered(fam, r)
    P = [float(np.prod([r[v] for v in w])) for w in fam]
    out = OrderedDict()
    for v in sorted(r, key=node_key):
        d = 0.0
        for i, w in enumerate(fam):
            if v not in w:
                continue
            others = float(np.prod([1.0 - P[j] for j in range(len(fam))
                                    if j != i]))
            d += others * float(np.prod([r[u] for u in w if u != v]))
        out[v] = d
    return out


def rank_mitigations(W, r, top_k=None):
    """Nodes ordered by risk importance, highest first.

    Ties are broken by ascending node id.

    Returns:
        (ResultSet): The top_k rows of :func:`importance_measures`.

    """
    if top_k is not None and top_k < 1:
        raise DomainError("top_k must be >= 1, got {}".format(top_k))
    rs = importance_measures(W, r)
    rows = sorted(rs.rows, key=lambda row: (-row[4], node_key(row[0])))
    if top_k is not None:
        rows = rows[:top_k]
    return ResultSet(rs.keys, rows)


def load_riskgraph(block):
    """Build (tree, system graph, risk vector) from a scenario block.

    The block has ``tree`` (root, gates, leaves), optional ``system``
    (nodes, edges) and ``risk``.  With ``propagate_dependencies`` set the
    tree is widened through the system graph.

    """
    system = None
    if block.get("system") is not None:
        system = SystemGraph(block["system"].get("nodes", []),
                             block["system"].get("edges", []))
    tree = AttackTree.from_dict(block["tree"], system=system)
    if block.get("propagate_dependencies", False):
        tree = tree.with_dependencies()
    return tree, system, _risk_vector(block["risk"])
