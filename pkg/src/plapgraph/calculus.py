"""Difference operators on a Dirichlet domain.

Every operator works on the closure; gradients at boundary vertices only
see neighbours inside the closure.  Public functions take and return
:class:`~plapgraph.graph.VertexFunction`; the ``_``-prefixed array versions
are what the solvers call in their inner loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import DirichletDomain, GraphError, VertexFunction

#: regularisation of ``|grad u|**(p-2)`` when ``p < 2``
SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class OperatorContext:
    domain: DirichletDomain
    p: float
    eps: float = SINGULAR_EPS

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def graph(self):
        return self.domain.graph

    @property
    def regularized(self) -> bool:
        return self.p < 2.0

    def with_p(self, p: float) -> "OperatorContext":
        return OperatorContext(self.domain, p, self.eps)

    def require_p_above_two(self, what: str) -> None:
        if self.p <= 2.0:
            raise ValueError(f"{what} requires p > 2, got p = {self.p}")


# -- array kernels -----------------------------------------------------------

def _edge_sum(dom: DirichletDomain, terms: np.ndarray) -> np.ndarray:
    """Per-vertex sum of symmetric edge terms (same value seen from both ends)."""
    n = dom.n_closure
    return (np.bincount(dom.edge_src, terms, minlength=n)
            + np.bincount(dom.edge_dst, terms, minlength=n))


def _edge_flux(dom: DirichletDomain, terms: np.ndarray) -> np.ndarray:
    """Per-vertex sum of antisymmetric edge terms ``t(x->y) = -t(y->x)``.

    ``terms`` is oriented from ``edge_src`` to ``edge_dst``.
    """
    n = dom.n_closure
    return (np.bincount(dom.edge_src, terms, minlength=n)
            - np.bincount(dom.edge_dst, terms, minlength=n))


def _gamma(dom: DirichletDomain, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    du = u[dom.edge_dst] - u[dom.edge_src]
    dv = v[dom.edge_dst] - v[dom.edge_src]
    return _edge_sum(dom, dom.edge_w * du * dv) / (2.0 * dom.mu)


def _gamma_uu(dom: DirichletDomain, u: np.ndarray) -> np.ndarray:
    du = u[dom.edge_dst] - u[dom.edge_src]
    return _edge_sum(dom, dom.edge_w * du * du) / (2.0 * dom.mu)


def _grad_power(ctx: OperatorContext, u: np.ndarray, exponent: float) -> np.ndarray:
    """``|grad u| ** exponent`` computed from the gradient form."""
    if exponent == 0.0:
        return np.ones(ctx.domain.n_closure)
    g2 = _gamma_uu(ctx.domain, u)
    if exponent < 0.0:
        g2 = g2 + ctx.eps ** 2
    return g2 ** (0.5 * exponent)


def _mu_laplacian(dom: DirichletDomain, u: np.ndarray) -> np.ndarray:
    du = u[dom.edge_dst] - u[dom.edge_src]
    return _edge_flux(dom, dom.edge_w * du) / dom.mu


def _p_laplacian(ctx: OperatorContext, u: np.ndarray) -> np.ndarray:
    """Closure-length array; only interior entries are meaningful."""
    dom = ctx.domain
    g = _grad_power(ctx, u, ctx.p - 2.0)
    du = u[dom.edge_dst] - u[dom.edge_src]
    flux = dom.edge_w * (g[dom.edge_src] + g[dom.edge_dst]) * du
    return _edge_flux(dom, flux) / (2.0 * dom.mu)


def _dirichlet_energy(ctx: OperatorContext, u: np.ndarray) -> float:
    """``int |grad u|^p dmu`` over the closure."""
    return math.fsum(ctx.domain.mu * _grad_power(ctx, u, ctx.p))


# -- public operators ---------------------------------------------------------

def _closure(ctx: OperatorContext, u: VertexFunction) -> np.ndarray:
    return ctx.domain.closure_values(u)


def mu_laplacian(ctx: OperatorContext, u: VertexFunction) -> VertexFunction:
    dom = ctx.domain
    return dom.interior_function(_mu_laplacian(dom, _closure(ctx, u))[dom.interior_idx])


def gamma(ctx: OperatorContext, u: VertexFunction, v: VertexFunction) -> VertexFunction:
    """Gradient form ``Gamma(u, v)`` on the closure."""
    dom = ctx.domain
    return VertexFunction(dom.closure, _gamma(dom, _closure(ctx, u), _closure(ctx, v)))


def grad_length(ctx: OperatorContext, u: VertexFunction) -> VertexFunction:
    dom = ctx.domain
    return VertexFunction(dom.closure, np.sqrt(_gamma_uu(dom, _closure(ctx, u))))


def p_laplacian(ctx: OperatorContext, u: VertexFunction) -> VertexFunction:
    """``Delta_p u`` at interior vertices.

    For ``p < 2`` the weight ``|grad u|**(p-2)`` is replaced by
    ``(Gamma(u,u) + eps**2)**((p-2)/2)``.
    """
    dom = ctx.domain
    return dom.interior_function(_p_laplacian(ctx, _closure(ctx, u))[dom.interior_idx])


def weak_p_form(ctx: OperatorContext, u: VertexFunction, phi: VertexFunction) -> float:
    """``int |grad u|^(p-2) Gamma(u, phi) dmu``; ``phi`` must vanish on the boundary."""
    if not phi.dirichlet:
        raise GraphError("test function must vanish on the boundary")
    dom = ctx.domain
    uu, pp = _closure(ctx, u), _closure(ctx, phi)
    g = _grad_power(ctx, uu, ctx.p - 2.0)
    return math.fsum(dom.mu * g * _gamma(dom, uu, pp))


def summation_by_parts_defect(ctx: OperatorContext, u: VertexFunction,
                              phi: VertexFunction) -> float:
    """Relative defect of ``int (Delta_p u) phi dmu = -weak_p_form(u, phi)``.

    Normalised by the larger of the two absolute term sums, so cancellation
    inside either side does not inflate the ratio.
    """
    if not phi.dirichlet:
        raise GraphError("test function must vanish on the boundary")
    dom = ctx.domain
    uu, pp = _closure(ctx, u), _closure(ctx, phi)
    g = _grad_power(ctx, uu, ctx.p - 2.0)
    weak_terms = dom.mu * g * _gamma(dom, uu, pp)
    idx = dom.interior_idx
    strong_terms = dom.mu[idx] * _p_laplacian(ctx, uu)[idx] * pp[idx]
    scale = max(math.fsum(np.abs(weak_terms)), math.fsum(np.abs(strong_terms)))
    if scale == 0.0:
        return 0.0
    return abs(math.fsum(weak_terms) + math.fsum(strong_terms)) / scale


def lp_norm(ctx: OperatorContext, u: VertexFunction, q: float) -> float:
    """``(int |u|^q dmu)^(1/q)``, or the max of ``|u|`` for ``q = inf``."""
    return _lq_norm(ctx.domain, _closure(ctx, u), q)


def _lq_norm(dom: DirichletDomain, u: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(u)))
    return math.fsum(dom.mu * np.abs(u) ** q) ** (1.0 / q)


def w1p_norm(ctx: OperatorContext, u: VertexFunction) -> float:
    uu = _closure(ctx, u)
    total = _dirichlet_energy(ctx, uu) + math.fsum(ctx.domain.mu * np.abs(uu) ** ctx.p)
    return total ** (1.0 / ctx.p)


def w01p_seminorm(ctx: OperatorContext, u: VertexFunction) -> float:
    return _dirichlet_energy(ctx, _closure(ctx, u)) ** (1.0 / ctx.p)


# -- embedding constants ------------------------------------------------------

def sample_dirichlet(ctx: OperatorContext, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` closure arrays, standard normal inside and zero on the boundary."""
    dom = ctx.domain
    out = np.zeros((size, dom.n_closure))
    out[:, dom.interior_idx] = rng.standard_normal((size, dom.n_interior))
    return out


def _unit_seminorm(ctx: OperatorContext, u: np.ndarray) -> np.ndarray | None:
    s = _dirichlet_energy(ctx, u) ** (1.0 / ctx.p)
    if s == 0.0:
        return None
    return u / s


def sobolev_constant_estimate(ctx: OperatorContext, q: float, trials: int = 1000,
                              seed: int = 0) -> float:
    """Empirical lower bound for the embedding constant ``C`` in
    ``||u||_{L^q} <= C ||u||_{W_0^{1,p}}``.

    Takes the largest ratio over every interior indicator function and
    ``trials`` Gaussian Dirichlet functions drawn from ``seed``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    q = float(q)
    if not (q >= 1.0):
        raise ValueError("q must be in [1, inf]")
    dom = ctx.domain
    candidates = [dom.extend(row) for row in np.eye(dom.n_interior)]
    candidates.extend(sample_dirichlet(ctx, np.random.default_rng(seed), trials))
    best = 0.0
    for u in candidates:
        s = _dirichlet_energy(ctx, u) ** (1.0 / ctx.p)
        if s > 0.0:
            best = max(best, _lq_norm(dom, u, q) / s)
    return best


def conjugate_exponent(p: float) -> float:
    return p / (p - 1.0)


def trudinger_moser_bound(ctx: OperatorContext, alpha: float, c0: float) -> float:
    """Right-hand side ``C |Omega|`` with ``C = exp(alpha C0 / mu_min)^(p/(p-1))``.

    ``mu_min`` and ``|Omega|`` are taken over the closure.  The constant is
    only as trustworthy as ``c0``; the empirical estimate from
    :func:`sobolev_constant_estimate` is a lower bound, so the result is a
    heuristic bound unless a certified ``c0`` is supplied.  The bound is the
    power ``p/(p-1)`` of the intermediate estimate on the
    ``(p-1)/p``-th root of the integral, applied to the integral itself.
    """
    ctx.require_p_above_two("the Trudinger-Moser bound")
    if alpha <= 1.0:
        raise ValueError("alpha must exceed 1")
    if c0 <= 0.0:
        raise ValueError("C0 must be positive")
    dom = ctx.domain
    mu_min = float(np.min(dom.mu))
    const = math.exp(alpha * c0 / mu_min) ** conjugate_exponent(ctx.p)
    return const * math.fsum(dom.mu)


@dataclass(frozen=True)
class BoundCheck:
    bound: float
    c0: float
    samples: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def trudinger_moser_check(ctx: OperatorContext, alpha: float, c0: float | None = None,
                          samples: int = 1000, seed: int = 0) -> BoundCheck:
    """Sample unit-seminorm Dirichlet functions and count bound violations.

    Without ``c0`` the embedding constant for ``q = p/(p-1)`` is estimated
    with the same seed.
    """
    ctx.require_p_above_two("the Trudinger-Moser check")
    pc = conjugate_exponent(ctx.p)
    if c0 is None:
        c0 = sobolev_constant_estimate(ctx, pc, trials=samples, seed=seed)
    bound = trudinger_moser_bound(ctx, alpha, c0)
    dom = ctx.domain
    rng = np.random.default_rng([seed, 1])
    violations, worst = 0, 0.0
    for u in sample_dirichlet(ctx, rng, samples):
        u = _unit_seminorm(ctx, u)
        if u is None:
            continue
        value = math.fsum(dom.mu * np.exp(alpha * np.abs(u) ** pc))
        worst = max(worst, value)
        if value > bound:
            violations += 1
    return BoundCheck(bound, c0, samples, violations, worst)


@dataclass(frozen=True)
class LinfCheck:
    c0: float
    c0_refined: float
    samples: int
    violations: int
    refinements: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def linf_bound_check(ctx: OperatorContext, c0: float | None = None, samples: int = 1000,
                     seed: int = 0) -> LinfCheck:
    """Check ``||u||_inf <= C0 / mu_min`` on sampled unit-seminorm functions.

    A sample whose ``L^{p/(p-1)}`` norm exceeds the running constant shows
    the empirical constant was too small; it raises the constant (counted in
    ``refinements``) instead of counting as a violation.
    """
    pc = conjugate_exponent(ctx.p)
    if c0 is None:
        c0 = sobolev_constant_estimate(ctx, pc, trials=samples, seed=seed)
    dom = ctx.domain
    mu_min = float(np.min(dom.mu))
    running = c0 * (1.0 + 1e-9)
    rng = np.random.default_rng([seed, 2])
    violations = refinements = 0
    for u in sample_dirichlet(ctx, rng, samples):
        u = _unit_seminorm(ctx, u)
        if u is None:
            continue
        ratio = _lq_norm(dom, u, pc)
        if ratio > running:
            running = ratio * (1.0 + 1e-9)
            refinements += 1
        if np.max(np.abs(u)) > running / mu_min:
            violations += 1
    return LinfCheck(c0, running, samples, violations, refinements)
