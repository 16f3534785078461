"""Principal eigenpair of ``-Delta_p u = lambda K |u|^(p-2) u`` with Dirichlet data.

The eigenvalue is the minimum of the Rayleigh quotient
``int |grad u|^p dmu / int K |u|^p dmu`` over functions vanishing on the
boundary, computed by projected gradient descent on ``{psi = 1}``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._descent import level_set_descent
from .calculus import OperatorContext, _dirichlet_energy, _p_laplacian
from .graph import DirichletDomain, GraphError, VertexFunction, WeightField


class InfeasibleError(ValueError):
    """Test function with ``int K |u|^p dmu <= 0``."""


@dataclass(frozen=True)
class EigenProblem:
    ctx: OperatorContext
    K: WeightField

    def __post_init__(self):
        if self.K.domain != self.ctx.domain:
            raise GraphError("weight is defined on a different domain")

    @property
    def domain(self) -> DirichletDomain:
        return self.ctx.domain

    @property
    def p(self) -> float:
        return self.ctx.p

    # interior-coordinate kernels used by the solvers

    def _phi(self, x: np.ndarray) -> float:
        return _dirichlet_energy(self.ctx, self.domain.extend(x))

    def _grad_phi(self, x: np.ndarray) -> np.ndarray:
        dom = self.domain
        return -self.p * _p_laplacian(self.ctx, dom.extend(x))[dom.interior_idx]

    def _psi(self, x: np.ndarray) -> float:
        return math.fsum(self.domain.mu_interior * self.K.values * np.abs(x) ** self.p)

    def _grad_psi(self, x: np.ndarray) -> np.ndarray:
        return self.p * self.K.values * _signed_power(x, self.p - 1.0)

    def _interior(self, u: VertexFunction) -> np.ndarray:
        if not u.dirichlet:
            raise GraphError("function must vanish on the boundary")
        return self.domain.restrict_interior(u)


def _signed_power(x: np.ndarray, e: float) -> np.ndarray:
    """``sign(x) |x|^e``, i.e. ``|x|^(e-1) x`` without the 0 * inf trap."""
    return np.sign(x) * np.abs(x) ** e


def phi(problem: EigenProblem, u: VertexFunction) -> float:
    return problem._phi(problem._interior(u))


def psi(problem: EigenProblem, u: VertexFunction) -> float:
    return problem._psi(problem._interior(u))


def rayleigh(problem: EigenProblem, u: VertexFunction) -> float:
    x = problem._interior(u)
    den = problem._psi(x)
    if not den > 0.0:
        raise InfeasibleError("infeasible test function: int K|u|^p dmu <= 0")
    return problem._phi(x) / den


def euler_lagrange_residual(problem: EigenProblem, lam: float,
                            u: VertexFunction) -> VertexFunction:
    """Pointwise defect ``-Delta_p u - lam K |u|^(p-2) u`` on the interior."""
    return problem.domain.interior_function(_el_residual(problem, lam, problem._interior(u)))


def _el_residual(problem: EigenProblem, lam: float, x: np.ndarray) -> np.ndarray:
    dom = problem.domain
    lap = _p_laplacian(problem.ctx, dom.extend(x))[dom.interior_idx]
    return -lap - lam * problem.K.values * _signed_power(x, problem.p - 1.0)


def scaled_max_residual(r: np.ndarray, x: np.ndarray, p: float) -> float:
    scale = max(1.0, float(np.max(np.abs(x))) ** (p - 1.0)) if x.size else 1.0
    return float(np.max(np.abs(r))) / scale


@dataclass(frozen=True)
class EigenConfig:
    tol: float = 1e-10
    max_iter: int = 100_000
    restarts: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class RestartSummary:
    index: int
    lambda1: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    eigenfunction: VertexFunction
    iterations: int
    residual: float
    restarts_used: int
    converged: bool
    restarts: tuple[RestartSummary, ...] = field(default=())
    # min of the normalised minimiser, oriented to positive mass, before |.|
    raw_min: float = 0.0

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "eigenfunction": self.eigenfunction.as_dict(),
            "raw_min": self.raw_min,
            "residual": self.residual,
            "iterations": self.iterations,
            "restarts": [asdict(r) for r in self.restarts],
            "converged": self.converged,
        }


def _feasible_start(problem: EigenProblem, rng: np.random.Generator) -> np.ndarray:
    x = np.abs(rng.standard_normal(problem.domain.n_interior))
    if problem._psi(x) > 0.0:
        return x
    best = int(np.argmax(problem.K.values * problem.domain.mu_interior))
    bump = np.zeros_like(x)
    bump[best] = 1.0
    c = 1.0
    for _ in range(200):
        if problem._psi(x + c * bump) > 0.0:
            return x + c * bump
        c *= 2.0
    raise InfeasibleError("no feasible starting function found")


def _normalize(problem: EigenProblem, x: np.ndarray) -> np.ndarray:
    return x / problem._psi(x) ** (1.0 / problem.p)


def _one_restart(problem: EigenProblem, x0: np.ndarray, cfg: EigenConfig):
    iterations = 0
    x = x0
    for _ in range(4):
        res = level_set_descent(
            problem._phi, problem._grad_phi, problem._psi, problem._grad_psi, x,
            level=1.0, degree=problem.p, weights=problem.domain.mu_interior,
            tol=cfg.tol, max_iter=cfg.max_iter - iterations,
        )
        iterations += res.iterations
        x = res.x
        # |e1| is a minimiser whenever e1 is; continue from it if the sign
        # flip changed anything
        if np.all(x >= 0.0) or np.all(x <= 0.0) or iterations >= cfg.max_iter:
            break
        x = np.abs(x)
    raw = _normalize(problem, x if np.dot(problem.domain.mu_interior, x) >= 0.0 else -x)
    return np.abs(raw), float(np.min(raw)), iterations, res.converged


def solve_principal(problem: EigenProblem, cfg: EigenConfig = EigenConfig()) -> EigenResult:
    """Minimise ``phi`` on ``{psi = 1}`` from ``cfg.restarts`` random starts.

    Restart ``i`` draws its start from ``default_rng([seed, i])``, so the
    outcome does not depend on the order restarts are run in.  The winner
    is the smallest eigenvalue; near-ties go to the larger value at the
    first interior vertex.
    """
    summaries, candidates = [], []
    for i in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, i])
        x, raw_min, its, conv = _one_restart(problem, _feasible_start(problem, rng), cfg)
        lam = problem._phi(x)
        summaries.append(RestartSummary(i, lam, its, conv))
        candidates.append((lam, x, its, conv, raw_min))

    def better(a, b) -> bool:
        tie = abs(a[0] - b[0]) <= 1e-12 * max(1.0, abs(b[0]))
        if tie:
            return a[1][0] > b[1][0]
        return a[0] < b[0]

    best = candidates[0]
    for cand in candidates[1:]:
        if better(cand, best):
            best = cand
    lam, x, its, conv, raw_min = best
    residual = scaled_max_residual(_el_residual(problem, lam, x), x, problem.p)
    return EigenResult(
        lambda1=lam,
        eigenfunction=problem.domain.dirichlet_function(x),
        iterations=its,
        residual=residual,
        restarts_used=cfg.restarts,
        converged=conv,
        restarts=tuple(summaries),
        raw_min=raw_min,
    )


# -- brute-force oracle -------------------------------------------------------

class _BatchRayleigh:
    """Rayleigh quotient of many interior vectors at once.

    Written directly from the definitions (edge incidence matrix, no shared
    kernels with the solver) so it can serve as an independent check.
    """

    def __init__(self, problem: EigenProblem):
        dom = problem.domain
        self.p = problem.p
        self.idx = dom.interior_idx
        self.m = dom.n_closure
        self.src, self.dst, self.w = dom.edge_src, dom.edge_dst, dom.edge_w
        inc = np.zeros((len(self.w), self.m))
        inc[np.arange(len(self.w)), self.src] = 1.0
        inc[np.arange(len(self.w)), self.dst] = 1.0
        self.inc = inc
        self.mu = dom.mu
        self.kmu = problem.K.values * dom.mu_interior

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        U = np.zeros((X.shape[0], self.m))
        U[:, self.idx] = X
        d = U[:, self.dst] - U[:, self.src]
        grad2 = (self.w * d * d) @ self.inc / (2.0 * self.mu)
        num = (self.mu * grad2 ** (self.p / 2.0)).sum(axis=1)
        den = (self.kmu * np.abs(X) ** self.p).sum(axis=1)
        out = np.full(X.shape[0], np.inf)
        ok = den > 0.0
        out[ok] = num[ok] / den[ok]
        return out


_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a: float, b: float, tol: float = 1e-13, max_iter: int = 200):
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _tangent_basis(d: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of the unit vector ``d``."""
    q, _ = np.linalg.qr(np.column_stack([d, np.eye(d.size)]))
    return q[:, 1:d.size].T


def brute_force_oracle(problem: EigenProblem, grid: int = 400) -> float:
    """Exhaustive angular search for the minimum Rayleigh quotient.

    Only for at most three interior vertices.  Directions on the unit
    sphere (modulo sign) are scanned on a ``grid``-point angular lattice;
    the best cell is then refined by cyclic golden-section line searches in
    the tangent plane at the best direction.
    """
    n = problem.domain.n_interior
    if n > 3:
        raise ValueError(f"brute_force_oracle supports at most 3 interior vertices, got {n}")
    if grid < 100:
        raise ValueError("grid must be at least 100")
    R = _BatchRayleigh(problem)
    if n == 1:
        return float(R(np.ones((1, 1)))[0])

    h = math.pi / grid
    if n == 2:
        theta = np.arange(grid) * h
        vals = R(np.column_stack([np.cos(theta), np.sin(theta)]))
        k = int(np.argmin(vals))
        best = np.array([math.cos(theta[k]), math.sin(theta[k])])
    else:
        polar = np.linspace(0.0, math.pi, grid + 1)
        azim = np.arange(grid) * h
        best_val, best = np.inf, None
        ca, sa = np.cos(azim), np.sin(azim)
        for t in polar:
            X = np.column_stack([math.sin(t) * ca, math.sin(t) * sa,
                                 np.full(grid, math.cos(t))])
            vals = R(X)
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val, best = vals[k], X[k].copy()
    if not np.isfinite(R(best)[0]):
        raise InfeasibleError("no feasible direction on the grid")
    return _refine(R, best, h)


def _refine(R, d: np.ndarray, h: float) -> float:
    """Golden-section refinement around direction ``d`` (gnomonic chart)."""
    basis = _tangent_basis(d)
    point = np.zeros(basis.shape[0])

    def value(z):
        return float(R(d + z @ basis)[0])

    best = value(point)
    directions = [row for row in np.eye(basis.shape[0])]
    if basis.shape[0] == 2:
        directions += [np.array([1.0, 1.0]) / math.sqrt(2.0),
                       np.array([1.0, -1.0]) / math.sqrt(2.0)]
    width = 2.0 * h
    for _ in range(400):
        start = point.copy()
        for e in directions:
            t, ft = _golden_min(lambda s: value(point + s * e), -width, width)
            if ft < best:
                point, best = point + t * e, ft
        step = point - start
        size = float(np.linalg.norm(step))
        if size > 0.0 and len(directions) > 1:
            e = step / size
            t, ft = _golden_min(lambda s: value(point + s * e), -2.0 * size, 2.0 * size)
            if ft < best:
                point, best = point + t * e, ft
        if size == 0.0:
            width *= 0.5
            if width < 1e-12:
                break
        else:
            width = max(2.0 * size, 1e-12)
    return best


# -- monotonicity harnesses -----------------------------------------------------

@dataclass(frozen=True)
class WeightMonotonicityReport:
    lambda_k1: float
    lambda_k2: float
    test_bound: float
    margin: float
    passed: bool
    result_k1: EigenResult = field(repr=False)
    result_k2: EigenResult = field(repr=False)


def verify_weight_monotonicity(ctx: OperatorContext, K1: WeightField, K2: WeightField,
                               cfg: EigenConfig = EigenConfig()) -> WeightMonotonicityReport:
    """Check that increasing the weight strictly lowers the principal eigenvalue.

    Requires ``K1 < K2`` at every interior vertex.  ``test_bound`` is the
    Rayleigh quotient for ``K2`` of the ``K1`` eigenfunction, an upper bound
    for ``lambda_1(K2)`` that is strictly below ``lambda_1(K1)``.
    """
    if not np.all(K1.values < K2.values):
        raise ValueError("hypothesis violated: K1 < K2 must hold at every interior vertex")
    p1, p2 = EigenProblem(ctx, K1), EigenProblem(ctx, K2)
    r1, r2 = solve_principal(p1, cfg), solve_principal(p2, cfg)
    e1 = r1.eigenfunction
    bound = phi(p2, e1) / psi(p2, e1)
    margin = 10.0 * cfg.tol
    passed = r2.lambda1 < r1.lambda1 - margin and r2.lambda1 <= bound * (1.0 + 1e-12)
    return WeightMonotonicityReport(r1.lambda1, r2.lambda1, bound, margin, passed, r1, r2)


@dataclass(frozen=True)
class DomainMonotonicityReport:
    lambda_small: float
    lambda_large: float
    extension_value: float
    slack: float
    passed: bool
    result_small: EigenResult = field(repr=False)
    result_large: EigenResult = field(repr=False)


def zero_extend(u: VertexFunction, small: DirichletDomain,
                large: DirichletDomain) -> VertexFunction:
    values = dict.fromkeys(large.closure, 0.0)
    values.update(u.as_dict())
    return large.function(values)


def verify_domain_monotonicity(dom1: DirichletDomain, dom2: DirichletDomain, K: WeightField,
                               p: float, cfg: EigenConfig = EigenConfig(),
                               slack: float = 1e-8) -> DomainMonotonicityReport:
    """Check ``lambda_1(dom2) <= lambda_1(dom1) + slack`` for nested interiors.

    ``K`` is given on the larger interior.  ``extension_value`` is the
    quotient on ``dom2`` of the zero extension of the ``dom1`` eigenfunction.
    """
    if dom1.graph is not dom2.graph:
        raise GraphError("domains live on different graphs")
    if not set(dom1.interior) < set(dom2.interior):
        raise ValueError("first interior must be a proper subset of the second")
    K2 = K if K.domain == dom2 else K.restricted(dom2)
    K1 = K2.restricted(dom1)
    prob1 = EigenProblem(OperatorContext(dom1, p), K1)
    prob2 = EigenProblem(OperatorContext(dom2, p), K2)
    r1, r2 = solve_principal(prob1, cfg), solve_principal(prob2, cfg)
    ext = rayleigh(prob2, zero_extend(r1.eigenfunction, dom1, dom2))
    passed = r2.lambda1 <= r1.lambda1 + slack
    return DomainMonotonicityReport(r1.lambda1, r2.lambda1, ext, slack, passed, r1, r2)
