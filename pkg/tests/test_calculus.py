import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plapgraph.calculus import (
    OperatorContext,
    gamma,
    grad_length,
    linf_bound_check,
    lp_norm,
    mu_laplacian,
    p_laplacian,
    sobolev_constant_estimate,
    summation_by_parts_defect,
    trudinger_moser_bound,
    trudinger_moser_check,
    w01p_seminorm,
    w1p_norm,
    weak_p_form,
)
from plapgraph.generators import random_domain, random_graph
from plapgraph.graph import integral

SQRT_HALF = math.sqrt(0.5)


def bump(dom, t=1.0):
    return dom.dirichlet_function([t] * dom.n_interior)


def test_p_must_exceed_one(path3):
    with pytest.raises(ValueError, match="p must exceed 1"):
        OperatorContext(path3[1], 1.0)


def test_mu_laplacian_examples(path3, path4):
    ctx = OperatorContext(path3[1], 2)
    assert mu_laplacian(ctx, bump(path3[1]))["b"] == -1.0
    assert mu_laplacian(ctx, path3[1].function(np.full(3, 7.3)))["b"] == 0.0
    dom4 = path4[1]
    lap = mu_laplacian(OperatorContext(dom4, 2), dom4.function({"a": 0, "b": 1, "c": 2, "d": 0}))
    assert lap["b"] == 0.0 and lap["c"] == -1.5


def test_gamma_examples(path3, rng):
    dom = path3[1]
    ctx = OperatorContext(dom, 2)
    u = bump(dom)
    g = gamma(ctx, u, u)
    assert g["b"] == 0.5 and g["a"] == 0.5 and g["c"] == 0.5
    v, w = (dom.function(rng.standard_normal(3)) for _ in range(2))
    assert np.array_equal(gamma(ctx, v, w).values, gamma(ctx, w, v).values)
    assert not gamma(ctx, v, dom.function(np.full(3, 2.0))).values.any()


def test_grad_length_examples(path3):
    dom = path3[1]
    ctx = OperatorContext(dom, 2)
    assert grad_length(ctx, bump(dom))["b"] == pytest.approx(0.7071068, abs=1e-7)
    assert not grad_length(ctx, dom.function(np.ones(3))).values.any()
    for t in (-3.0, 0.25, 2.0):
        np.testing.assert_allclose(grad_length(ctx, bump(dom, t)).values,
                                   abs(t) * SQRT_HALF, rtol=1e-15)


def test_p_laplacian_examples(path3):
    dom = path3[1]
    u = bump(dom)
    c2 = OperatorContext(dom, 2)
    assert np.array_equal(p_laplacian(c2, u).values, mu_laplacian(c2, u).values)
    assert p_laplacian(OperatorContext(dom, 4), u)["b"] == pytest.approx(-0.5, rel=1e-15)
    for t in (0.3, 1.0, 2.5):
        val = p_laplacian(OperatorContext(dom, 3), bump(dom, t))["b"]
        assert val == pytest.approx(-t * t * SQRT_HALF, rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_p2_reduction_bit_exact(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(20, rng)
    dom = random_domain(g, 8, rng)
    ctx = OperatorContext(dom, 2.0)
    u = dom.function(rng.standard_normal(dom.n_closure))
    assert np.array_equal(p_laplacian(ctx, u).values, mu_laplacian(ctx, u).values)


def test_weak_form_examples(path3, path4, rng):
    dom = path3[1]
    ctx = OperatorContext(dom, 2)
    u = bump(dom)
    assert weak_p_form(ctx, u, u) == 2.0
    assert -integral(dom, dom.dirichlet_function(p_laplacian(ctx, u).values * u.values[1:2])) == 2.0
    assert weak_p_form(ctx, u, dom.dirichlet_function([0.0])) == 0.0
    dom4 = path4[1]
    for p in (2.0, 3.0, 4.0):
        c = OperatorContext(dom4, p)
        v = dom4.function(rng.standard_normal(4))
        phi = dom4.dirichlet_function(rng.standard_normal(2))
        strong = integral(dom4, dom4.interior_function(p_laplacian(c, v).values
                                                       * phi.values[dom4.interior_idx]))
        assert -strong == pytest.approx(weak_p_form(c, v, phi), rel=1e-12)


def test_weak_form_needs_dirichlet_test_function(path3):
    dom = path3[1]
    with pytest.raises(ValueError):
        weak_p_form(OperatorContext(dom, 2), bump(dom), dom.function(np.ones(3)))


def test_norm_examples(path3):
    dom = path3[1]
    u = bump(dom)
    assert w01p_seminorm(OperatorContext(dom, 2), u) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert w01p_seminorm(OperatorContext(dom, 4), u) == pytest.approx(1.0, rel=1e-15)
    z = dom.dirichlet_function([0.0])
    for p in (2, 4):
        c = OperatorContext(dom, p)
        assert w01p_seminorm(c, z) == 0.0 and w1p_norm(c, z) == 0.0
    # |grad u|^2 = 1/2 everywhere, |u|^2 integrates to 2
    assert w1p_norm(OperatorContext(dom, 2), u) == pytest.approx(math.sqrt(4.0), rel=1e-15)
    assert lp_norm(OperatorContext(dom, 2), u, math.inf) == 1.0


def test_sobolev_examples(path3, path4):
    ctx = OperatorContext(path3[1], 2)
    assert sobolev_constant_estimate(ctx, 2, trials=1) >= 1.0 - 1e-15
    # the only Dirichlet direction on PATH3 is the bump, so the estimate is exact
    assert sobolev_constant_estimate(ctx, math.inf, trials=10) == pytest.approx(SQRT_HALF, rel=1e-15)
    c4 = OperatorContext(path4[1], 3)
    a = sobolev_constant_estimate(c4, 1.5, trials=1, seed=9)
    assert a == sobolev_constant_estimate(c4, 1.5, trials=1, seed=9)


def test_trudinger_moser_bound_example(path3):
    bound = trudinger_moser_bound(OperatorContext(path3[1], 4), 2.0, 1.0)
    assert bound == pytest.approx(4.0 * math.exp(8.0 / 3.0), rel=1e-14)
    assert bound == pytest.approx(57.57, abs=0.01)


def test_trudinger_moser_rejects(path3):
    with pytest.raises(ValueError, match="p > 2|exceed 2"):
        trudinger_moser_bound(OperatorContext(path3[1], 2), 2.0, 1.0)
    with pytest.raises(ValueError):
        trudinger_moser_bound(OperatorContext(path3[1], 3), 1.0, 1.0)


def test_trudinger_moser_zero_function(path3):
    dom = path3[1]
    bound = trudinger_moser_bound(OperatorContext(dom, 3), 1.5, 0.1)
    assert math.fsum(dom.mu * np.exp(0.0)) <= bound


def test_trudinger_moser_path4(path4):
    chk = trudinger_moser_check(OperatorContext(path4[1], 3), 1.5, samples=1000, seed=0)
    assert chk.violations == 0 and chk.worst <= chk.bound


def test_linf_bound(path4):
    chk = linf_bound_check(OperatorContext(path4[1], 3), samples=500, seed=3)
    assert chk.passed and chk.c0_refined >= chk.c0


# -- properties ----------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from([1.5, 2.0, 2.5, 3.0, 4.0])


def _instance(seed, p, max_n=40):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_n))
    g = random_graph(n, rng)
    dom = random_domain(g, int(rng.integers(1, n)), rng)
    return rng, OperatorContext(dom, p)


@settings(max_examples=60, deadline=None)
@given(seeds, exponents)
def test_summation_by_parts(seed, p):
    rng, ctx = _instance(seed, p)
    dom = ctx.domain
    u = dom.function(rng.standard_normal(dom.n_closure))
    phi = dom.dirichlet_function(rng.standard_normal(dom.n_interior))
    assert summation_by_parts_defect(ctx, u, phi) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, exponents)
def test_gamma_properties(seed, p):
    rng, ctx = _instance(seed, p)
    dom = ctx.domain
    u, v, w = (dom.function(rng.standard_normal(dom.n_closure)) for _ in range(3))
    a, b = rng.standard_normal(2)
    lhs = gamma(ctx, u * a + v * b, w).values
    rhs = a * gamma(ctx, u, w).values + b * gamma(ctx, v, w).values
    scale = abs(a) * np.abs(gamma(ctx, u, w).values) + abs(b) * np.abs(gamma(ctx, v, w).values)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * (scale + 1e-300) + 1e-300)
    guu = gamma(ctx, u, u).values
    assert np.all(guu >= 0.0)
    np.testing.assert_allclose(grad_length(ctx, u).values ** 2, guu, rtol=1e-14, atol=0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-100, 100).filter(lambda t: abs(t) >= 1e-100))
def test_grad_length_homogeneous(seed, t):
    rng, ctx = _instance(seed, 2.0)
    u = ctx.domain.function(rng.standard_normal(ctx.domain.n_closure))
    np.testing.assert_allclose(grad_length(ctx, u * t).values,
                               abs(t) * grad_length(ctx, u).values, rtol=1e-14, atol=0)


@settings(max_examples=40, deadline=None)
@given(seeds, exponents)
def test_seminorm_rigidity(seed, p):
    rng, ctx = _instance(seed, p)
    dom = ctx.domain
    assert w01p_seminorm(ctx, dom.dirichlet_function(np.zeros(dom.n_interior))) == 0.0
    x = np.zeros(dom.n_interior)
    x[int(rng.integers(dom.n_interior))] = rng.uniform(1e-3, 1.0)
    assert w01p_seminorm(ctx, dom.dirichlet_function(x)) > 0.0


def test_regularization_for_small_p(path4):
    dom = path4[1]
    ctx = OperatorContext(dom, 1.5)
    flat = dom.function(np.ones(4))
    assert np.all(np.isfinite(p_laplacian(ctx, flat).values))
    assert ctx.regularized
