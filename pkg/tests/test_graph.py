import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plapgraph.generators import random_domain, random_graph
from plapgraph.graph import (
    DirichletDomain,
    GraphError,
    WeightedGraph,
    WeightField,
    graph_document,
    integral,
    load_function,
    load_graph,
    load_weight,
    negative_part,
    positive_part,
    volume,
)

PATH3_DOC = {"vertices": ["a", "b", "c"], "edges": [["a", "b", 1.0], ["b", "c", 1.0]],
             "interior": ["b"]}
PATH4_DOC = {"vertices": ["a", "b", "c", "d"],
             "edges": [["a", "b", 1.0], ["b", "c", 1.0], ["c", "d", 1.0]],
             "interior": ["b", "c"]}


def test_load_path3():
    g, dom = load_graph(PATH3_DOC)
    assert g.mu == {"a": 1.0, "b": 2.0, "c": 1.0}
    assert dom.boundary == ("a", "c")
    assert dom.closure == ("a", "b", "c")


def test_load_path4():
    g, dom = load_graph(json.dumps(PATH4_DOC))
    assert dom.boundary == ("a", "d")
    assert g.mu["b"] == g.mu["c"] == 2.0


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["edges"][0].__setitem__(2, -1.0), "nonpositive weight"),
    (lambda d: d["edges"].append(["b", "a", 2.0]), "asymmetric duplicate edge"),
    (lambda d: d["vertices"].append("z"), "disconnected"),
    (lambda d: d.__setitem__("interior", []), "interior is empty"),
    (lambda d: d.__setitem__("interior", ["q"]), "unknown vertex"),
    (lambda d: d["edges"].append(["a", "x", 1.0]), "unknown vertex"),
    (lambda d: d["edges"].append(["a", "a", 1.0]), "self-loop"),
])
def test_load_errors(mutate, message):
    doc = json.loads(json.dumps(PATH3_DOC))
    mutate(doc)
    with pytest.raises(GraphError, match=message):
        load_graph(doc)


def test_schema_violation():
    with pytest.raises(GraphError, match="schema"):
        load_graph({"vertices": ["a"], "edges": [["a", "b"]], "interior": ["a"]})


def test_weight_document(path4):
    _, dom = path4
    K = load_weight({"K": {"b": 1.0, "c": -1.0}}, dom)
    assert K.as_dict() == {"b": 1.0, "c": -1.0}
    with pytest.raises(GraphError):
        load_weight({"K": {"b": 1.0}}, dom)
    with pytest.raises(GraphError):
        load_weight({"K": {"b": 1.0, "c": 1.0, "a": 0.0}}, dom)
    with pytest.raises(GraphError, match="positive"):
        load_weight({"K": {"b": -1.0, "c": 0.0}}, dom)


def test_function_document(path3):
    _, dom = path3
    u = load_function({"u": {"a": 0.0, "b": 1.0, "c": 0.0}}, dom)
    assert u.dirichlet and u["b"] == 1.0
    v = load_function({"u": {"a": 1.0, "b": 1.0, "c": 1.0}}, dom)
    assert not v.dirichlet
    with pytest.raises(KeyError):
        u["d"]


def test_function_outside_closure_is_error():
    g = WeightedGraph("abcd", [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0)])
    dom = DirichletDomain(g, ["b"])
    assert dom.closure == ("a", "b", "c")
    with pytest.raises(GraphError):
        dom.function({"a": 0.0, "b": 1.0, "c": 0.0, "d": 0.0})
    with pytest.raises(KeyError):
        dom.function({"a": 0.0, "b": 1.0, "c": 0.0})["d"]


def test_integral_examples(path3):
    _, dom = path3
    assert integral(dom, dom.function({"a": 1.0, "b": 1.0, "c": 1.0})) == 4.0
    assert integral(dom, dom.function({"a": 0.0, "b": 1.0, "c": 0.0})) == 2.0
    assert integral(dom, dom.function(np.zeros(3))) == 0.0


def test_volume(path3, path4):
    assert volume(path3[1]) == 4.0
    assert volume(path4[1]) == 6.0
    g = WeightedGraph(["x", "y"], [("x", "y", 1.0)])
    assert volume(DirichletDomain(g, ["x"])) == 2.0


def test_parts(path3):
    _, dom = path3
    u = dom.function({"a": 0.0, "b": -2.0, "c": 3.0})
    assert positive_part(u).as_dict() == {"a": 0.0, "b": 0.0, "c": 3.0}
    assert negative_part(u).as_dict() == {"a": 0.0, "b": -2.0, "c": 0.0}
    z = dom.function(np.zeros(3))
    assert not positive_part(z).values.any() and not negative_part(z).values.any()
    one = dom.function(np.ones(3))
    assert np.array_equal(positive_part(one).values, one.values)
    assert not negative_part(one).values.any()


def test_dirichlet_flag_is_bit_exact(path3):
    _, dom = path3
    u = dom.dirichlet_function([5.0])
    assert u.dirichlet and u["a"] == 0.0 and u["c"] == 0.0
    assert not dom.function({"a": 1e-300, "b": 1.0, "c": 0.0}).dirichlet


def test_weight_field_requires_positive_part(path4):
    _, dom = path4
    with pytest.raises(GraphError):
        WeightField(dom, [-1.0, 0.0])


# -- invariants -------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 25))
    g = random_graph(n, rng)
    return rng, g, random_domain(g, int(rng.integers(1, n)), rng)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_measure_matches_edges(seed):
    _, g, _ = _instance(seed)
    assert g.check_measure()
    for v in g.vertices:
        assert g.mu[v] == math.fsum(w for _, w in g.neighbors[v])


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_boundary_permutation_invariant(seed):
    rng, g, dom = _instance(seed)
    doc = graph_document(g, dom.interior)
    perm = rng.permutation(len(doc["edges"]))
    edges = [doc["edges"][i] for i in perm]
    edges = [[y, x, w] if rng.random() < 0.5 else [x, y, w] for x, y, w in edges]
    g2, dom2 = load_graph({**doc, "edges": edges, "vertices": doc["vertices"][::-1]})
    assert dom2.boundary == dom.boundary
    assert dom2.closure == dom.closure
    assert g2.mu == g.mu
    for y in dom.boundary:
        assert y not in dom.interior
        assert any(x in dom.interior for x, _ in g.neighbors[y])


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-10, 10), st.floats(-10, 10))
def test_integral_linear(seed, alpha, beta):
    rng, _, dom = _instance(seed)
    u = dom.function(rng.standard_normal(dom.n_closure))
    v = dom.function(rng.standard_normal(dom.n_closure))
    lhs = integral(dom, u * alpha + v * beta)
    rhs = alpha * integral(dom, u) + beta * integral(dom, v)
    scale = integral(dom, dom.function(np.abs(alpha * u.values) + np.abs(beta * v.values)))
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_positive_negative_decomposition(seed):
    rng, _, dom = _instance(seed)
    u = dom.function(rng.standard_normal(dom.n_closure))
    pos, neg = positive_part(u), negative_part(u)
    assert np.array_equal(pos.values + neg.values, u.values)
    assert not (pos.values * neg.values).any()
