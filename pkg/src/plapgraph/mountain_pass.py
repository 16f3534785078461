"""Positive solutions of ``-Delta_p u = lam K |u|^(p-2) u + f(x, u)`` by mountain pass.

The energy is

    J(u) = 1/p int |grad u|^p - lam/p int K |u|^p - int F(x, u^+)

with ``0 < lam < lambda_1``.  The solver certifies the mountain-pass
geometry (``J > 0`` on a small seminorm sphere, ``J(u1) < 0`` further out
along the principal eigenfunction), then deforms a discrete path from 0 to
``u1``: at every outer iteration the path maximum is located, pushed
downhill orthogonally to the path, and the path is re-sampled by arc
length.  A Newton refinement on ``grad J = 0`` finishes the run when the
path iteration stalls short of the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._descent import level_set_descent, project
from .calculus import _dirichlet_energy, _p_laplacian
from .eigen import (EigenConfig, EigenProblem, EigenResult, _signed_power,
                    scaled_max_residual, solve_principal)
from .graph import GraphError, VertexFunction
from .nonlinearity import Nonlinearity


class GeometryError(RuntimeError):
    """Mountain-pass geometry could not be certified; ``best`` holds what was found."""

    def __init__(self, message: str, best: dict):
        super().__init__(message)
        self.best = best


class PositivityError(RuntimeError):
    def __init__(self, message: str, report: "PositivityReport"):
        super().__init__(message)
        self.report = report


class _Energy:
    """``J`` and its derivatives in interior coordinates."""

    def __init__(self, problem: EigenProblem, nl: Nonlinearity, lam: float):
        if nl.domain != problem.domain:
            raise GraphError("nonlinearity is defined on a different domain")
        if nl.p != problem.p:
            raise ValueError(f"nonlinearity has p = {nl.p}, operator has p = {problem.p}")
        problem.ctx.require_p_above_two("the semilinear problem")
        self.problem, self.nl, self.lam = problem, nl, float(lam)
        self.dom = problem.domain
        self.p = problem.p
        self.mu = self.dom.mu_interior

    def value(self, x: np.ndarray) -> float:
        """``J(x)``; ``inf`` when the terms overflow, so line searches reject it."""
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                phi = _dirichlet_energy(self.problem.ctx, self.dom.extend(x))
                psi = self.problem._psi(x)
                source = math.fsum(self.mu * self.nl.F(x))
            except (ValueError, OverflowError):
                return math.inf
        out = phi / self.p - self.lam * psi / self.p - source
        return out if math.isfinite(out) else math.inf

    def grad(self, x: np.ndarray) -> np.ndarray:
        lap = _p_laplacian(self.problem.ctx, self.dom.extend(x))[self.dom.interior_idx]
        return (-lap - self.lam * self.problem.K.values * _signed_power(x, self.p - 1.0)
                - self.nl.f(x))

    def pairing(self, x: np.ndarray) -> float:
        """``<J'(u), u>`` in the measure inner product."""
        return math.fsum(self.mu * self.grad(x) * x)

    def seminorm(self, x: np.ndarray) -> float:
        return self.problem._phi(x) ** (1.0 / self.p)

    def residual(self, x: np.ndarray) -> float:
        return scaled_max_residual(self.grad(x), x, self.p)

    def norm(self, x: np.ndarray) -> float:
        return math.sqrt(float(np.dot(self.mu * x, x)))


def J(problem: EigenProblem, nl: Nonlinearity, lam: float, u: VertexFunction) -> float:
    return _Energy(problem, nl, lam).value(problem._interior(u))


def grad_J(problem: EigenProblem, nl: Nonlinearity, lam: float,
           u: VertexFunction) -> VertexFunction:
    """Gradient of ``J`` in the measure metric, on the interior.

    ``d/de J(u + e v) at e = 0`` equals ``sum mu(x) g(x) v(x)`` for
    Dirichlet ``v``.
    """
    x = problem._interior(u)
    return problem.domain.interior_function(_Energy(problem, nl, lam).grad(x))


@dataclass(frozen=True)
class MountainPassConfig:
    path_points: int = 33
    tol: float = 1e-9
    max_outer: int = 3000
    patience: int = 50
    seed: int = 0
    ring_samples: int = 64
    refine: bool = True
    eigen: EigenConfig = field(default_factory=EigenConfig)

    def __post_init__(self):
        if self.path_points < 16:
            raise ValueError("path_points must be at least 16")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


def _check_lambda(lam: float, lambda1: float) -> None:
    if not 0.0 < lam < lambda1:
        raise ValueError(f"lambda must lie in (0, lambda_1) = (0, {lambda1:.12g}), got {lam}")


def _principal(problem: EigenProblem, cfg: MountainPassConfig,
               eigen: EigenResult | None) -> EigenResult:
    return eigen if eigen is not None else solve_principal(problem, cfg.eigen)


# -- geometry -------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryCertificate:
    r: float
    inf_ring: float
    u1: VertexFunction
    J_u1: float
    seminorm_u1: float
    lambda1: float

    def to_dict(self) -> dict:
        return {"r": self.r, "inf_ring": self.inf_ring, "J_u1": self.J_u1,
                "seminorm_u1": self.seminorm_u1}


def _ring_infimum(energy: _Energy, r: float, starts: list[np.ndarray]) -> float:
    """Sampled infimum of ``J`` on ``{seminorm = r}``, locally minimised."""
    phi, gphi = energy.problem._phi, energy.problem._grad_phi
    level = r ** energy.p
    values = []
    for x in starts:
        x = x * (level / phi(x)) ** (1.0 / energy.p)
        values.append((energy.value(x), x))
    values.sort(key=lambda t: t[0])
    best = values[0][0]
    for _, x in values[:3]:
        res = level_set_descent(energy.value, energy.grad, phi, gphi, x,
                                level=level, degree=energy.p, weights=energy.mu,
                                tol=1e-8, max_iter=300)
        best = min(best, res.value)
    return best


def certify_geometry(problem: EigenProblem, nl: Nonlinearity, lam: float,
                     cfg: MountainPassConfig = MountainPassConfig(),
                     eigen: EigenResult | None = None) -> GeometryCertificate:
    """Find ``r`` with ``inf J > 0`` on the seminorm sphere and ``u1`` beyond it with ``J < 0``.

    ``u1`` is a multiple of the principal eigenfunction; ``r`` is tried at
    ``seminorm(u1) / 2^k`` for ``k = 1, 2, ...`` until the sampled and
    locally minimised ring infimum is positive.
    """
    eig = _principal(problem, cfg, eigen)
    _check_lambda(lam, eig.lambda1)
    energy = _Energy(problem, nl, lam)
    e1 = problem.domain.restrict_interior(eig.eigenfunction)

    t, u1 = 1.0, None
    for _ in range(200):
        if energy.value(t * e1) < 0.0:
            u1 = t * e1
            break
        t *= 2.0
    if u1 is None:
        raise GeometryError("J stays nonnegative along the eigenfunction ray", {"t": t})
    s1 = energy.seminorm(u1)

    rng = np.random.default_rng([cfg.seed, 7])
    draws = rng.standard_normal((cfg.ring_samples, e1.size))
    starts = [e1, -e1] + [np.abs(z) for z in draws[::2]] + list(draws[1::2])
    starts = [x for x in starts if problem._phi(x) > 0.0]
    best = {"r": None, "inf_ring": -math.inf, "J_u1": energy.value(u1)}
    r = s1
    for _ in range(60):
        r *= 0.5
        inf_ring = _ring_infimum(energy, r, starts)
        if inf_ring > best["inf_ring"]:
            best.update(r=r, inf_ring=inf_ring)
        if inf_ring > 0.0:
            return GeometryCertificate(r, inf_ring, problem.domain.dirichlet_function(u1),
                                       energy.value(u1), s1, eig.lambda1)
    raise GeometryError("no radius with positive ring infimum found", best)


# -- diagnostics ------------------------------------------------------------------

@dataclass
class MountainPassHistory:
    """Iterates of a run with the data needed for the boundedness diagnostic."""

    energy: _Energy
    lambda1: float
    records: list[dict] = field(default_factory=list)

    def record(self, x: np.ndarray, **extra) -> dict:
        rec = {
            "J": self.energy.value(x),
            "residual": self.energy.residual(x),
            "seminorm": self.energy.seminorm(x),
            "pairing": self.energy.pairing(x),
            "x": np.array(x, dtype=float),
        }
        rec.update(extra)
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class PSReport:
    max_seminorm: float
    final_seminorm: float
    level_bound: float
    c_empirical: float
    bound_violations: int
    unbounded: bool

    def to_dict(self) -> dict:
        return dict(vars(self))


def ps_diagnostics(history: MountainPassHistory, growth_limit: float = 2.0) -> PSReport:
    """Boundedness check along the iterates of a mountain-pass run.

    For every iterate ``u_k`` the coercivity estimate

        (1/p - 1/theta)(1 - lam/lambda_1) |u_k|^p <= J(u_k) - <J'(u_k), u_k>/theta + A

    must hold, with ``A`` the integral of the Ambrosetti-Rabinowitz defect
    below ``s0``; a failure is counted in ``bound_violations``.
    ``c_empirical`` is the largest right-hand side seen.  ``level_bound`` is
    the seminorm allowed at the final level with a vanishing derivative;
    the run is flagged ``unbounded`` when some iterate exceeds
    ``growth_limit`` times the larger of that and the final seminorm.
    """
    e = history.energy
    p, theta, lam, lambda1 = e.p, e.nl.theta, e.lam, history.lambda1
    if not history.records:
        raise ValueError("empty history")
    coef = (1.0 / p - 1.0 / theta) * (1.0 - lam / lambda1)
    offset = math.fsum(e.mu * e.nl.ar_offset())
    violations, c_emp = 0, -math.inf
    for rec in history.records:
        lhs = coef * rec["seminorm"] ** p
        rhs = rec["J"] - rec["pairing"] / theta + offset
        c_emp = max(c_emp, rhs)
        if lhs > rhs + 1e-9 * max(1.0, abs(rhs)):
            violations += 1
    final = history.records[-1]
    level = max(final["J"], 0.0) + offset
    level_bound = (level / coef) ** (1.0 / p)
    max_semi = max(rec["seminorm"] for rec in history.records)
    unbounded = max_semi > growth_limit * max(level_bound, final["seminorm"])
    return PSReport(max_semi, final["seminorm"], level_bound, c_emp, violations, unbounded)


# -- positivity -----------------------------------------------------------------------

@dataclass(frozen=True)
class PositivityReport:
    passed: bool
    negative_sup: float
    threshold: float
    pairing: float
    clamped: VertexFunction
    residual_after_clamp: float

    def to_dict(self) -> dict:
        return {"passed": self.passed, "negative_sup": self.negative_sup,
                "threshold": self.threshold, "pairing": self.pairing,
                "residual_after_clamp": self.residual_after_clamp}


def positivity_check(problem: EigenProblem, nl: Nonlinearity, lam: float,
                     u: VertexFunction) -> PositivityReport:
    """Test a candidate solution for a nonnegligible negative part.

    Reports ``int u^- (-Delta_p u - lam K |u|^(p-2) u - f(x, u^+)) dmu`` and
    ``||u^-||_inf``; passes when the latter is at most
    ``1e-8 max(1, ||u||_inf)``.  The returned function has negatives
    clamped to zero and its residual recomputed.
    """
    energy = _Energy(problem, nl, lam)
    x = problem._interior(u)
    neg = np.minimum(x, 0.0)
    neg_sup = float(np.max(-neg)) if neg.size else 0.0
    threshold = 1e-8 * max(1.0, float(np.max(np.abs(x))))
    pairing = math.fsum(energy.mu * neg * energy.grad(x))
    clamped = np.maximum(x, 0.0)
    report = PositivityReport(neg_sup <= threshold, neg_sup, threshold, pairing,
                              problem.domain.dirichlet_function(clamped),
                              energy.residual(clamped))
    if not report.passed:
        raise PositivityError(
            f"solution not nonnegative: ||u^-||_inf = {neg_sup:.3e} > {threshold:.3e}", report)
    return report


# -- solver ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolutionReport:
    solution: VertexFunction
    J_value: float
    residual: float
    c: float
    lam: float
    lambda1: float
    converged: bool
    geometry: GeometryCertificate
    outer_iterations: int
    refined: bool
    message: str
    positivity: PositivityReport | None = None
    ps: PSReport | None = None
    history: MountainPassHistory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "lambda1": self.lambda1,
            "lambda": self.lam,
            "c": self.c,
            "J": self.J_value,
            "residual": self.residual,
            "u": self.solution.as_dict(),
            "geometry": self.geometry.to_dict(),
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "refined": self.refined,
            "message": self.message,
        }
        if self.positivity is not None:
            out["positivity"] = self.positivity.to_dict()
        if self.ps is not None:
            out["ps_diagnostics"] = self.ps.to_dict()
        return out


class _Path:
    """Piecewise-linear path of interior vectors with fixed endpoints."""

    def __init__(self, energy: _Energy, nodes: np.ndarray):
        self.energy = energy
        self.nodes = nodes

    def lengths(self) -> np.ndarray:
        d = np.diff(self.nodes, axis=0)
        seg = np.sqrt(np.einsum("ij,j,ij->i", d, self.energy.mu, d))
        return np.concatenate([[0.0], np.cumsum(seg)])

    def _resample(self, s: np.ndarray, targets: np.ndarray) -> np.ndarray:
        out = np.empty((targets.size, self.nodes.shape[1]))
        for j in range(self.nodes.shape[1]):
            out[:, j] = np.interp(targets, s, self.nodes[:, j])
        return out

    def reparametrize(self, keep: int) -> int:
        """Equal arc-length spacing on each side of node ``keep``, which stays put."""
        n = len(self.nodes)
        s = self.lengths()
        total = s[-1]
        if total == 0.0:
            return keep
        k = int(round((n - 1) * s[keep] / total))
        k = min(max(k, 1), n - 2)
        left = self._resample(s, np.linspace(0.0, s[keep], k + 1))
        right = self._resample(s, np.linspace(s[keep], total, n - k))
        left[-1] = self.nodes[keep]
        self.nodes = np.vstack([left, right[1:]])
        self.nodes[0] = 0.0
        return k

    def point(self, k: int, t: float) -> np.ndarray:
        """Polyline point: ``t in [-1, 0]`` walks toward node ``k-1``, ``[0, 1]`` toward ``k+1``."""
        if t < 0.0:
            return self.nodes[k] + (-t) * (self.nodes[k - 1] - self.nodes[k])
        return self.nodes[k] + t * (self.nodes[k + 1] - self.nodes[k])

    def local_max(self, k: int) -> tuple[np.ndarray, float]:
        """Maximise ``J`` along the two segments adjacent to node ``k``."""
        val = self.energy.value
        res = optimize.minimize_scalar(lambda t: -val(self.point(k, t)),
                                       bounds=(-1.0, 1.0), method="bounded",
                                       options={"xatol": 1e-12})
        x = self.point(k, float(res.x))
        fx = val(x)
        f0 = val(self.nodes[k])
        if f0 >= fx:
            return self.nodes[k].copy(), f0
        return x, fx


def _newton_refine(energy: _Energy, x0: np.ndarray, tol: float):
    sol = optimize.root(energy.grad, x0, method="hybr", options={"xtol": 1e-15})
    x = sol.x
    if not np.all(np.isfinite(x)):
        return None
    # stay on the same critical point: small move, same sign of J
    if energy.norm(x - x0) > 0.25 * max(energy.norm(x0), 1e-300):
        return None
    if energy.value(x) <= 0.0 or energy.residual(x) > max(tol, energy.residual(x0)):
        return None
    return x


def mountain_pass_solve(problem: EigenProblem, nl: Nonlinearity, lam: float,
                        cfg: MountainPassConfig = MountainPassConfig(),
                        eigen: EigenResult | None = None,
                        geometry: GeometryCertificate | None = None) -> SolutionReport:
    """Mountain-pass critical point of ``J`` between 0 and ``u1``.

    ``converged`` is set only when the final scaled residual is at most
    ``cfg.tol`` and the positivity check passes.
    """
    eig = _principal(problem, cfg, eigen)
    _check_lambda(lam, eig.lambda1)
    if geometry is None:
        geometry = certify_geometry(problem, nl, lam, cfg, eig)
    energy = _Energy(problem, nl, lam)
    dom = problem.domain
    u1 = dom.restrict_interior(geometry.u1)

    ts = np.linspace(0.0, 1.0, cfg.path_points)
    path = _Path(energy, ts[:, None] * u1[None, :])
    history = MountainPassHistory(energy, eig.lambda1)

    best_x, best_res, c = None, math.inf, math.nan
    eta, converged, outer, since_best = 1.0, False, 0, 0
    for outer in range(1, cfg.max_outer + 1):
        values = [energy.value(x) for x in path.nodes[1:-1]]
        k = 1 + int(np.argmax(values))
        x, fx = path.local_max(k)
        path.nodes[k] = x
        c = fx
        g = energy.grad(x)
        res = scaled_max_residual(g, x, energy.p)
        history.record(x, node=k)
        if res < 0.5 * best_res:
            since_best = 0
        else:
            since_best += 1
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= cfg.tol:
            converged = True
            break
        if since_best > cfg.patience:
            break
        d = project(g, path.nodes[k + 1] - path.nodes[k - 1], energy.mu)
        slope = float(np.dot(energy.mu * d, d))
        if slope == 0.0:
            break
        # at most half the distance to the origin per step
        eta = min(4.0 * eta, 0.5 * energy.norm(x) / math.sqrt(slope))
        for _ in range(80):
            trial = x - eta * d
            if energy.value(trial) <= fx - 1e-4 * eta * slope:
                break
            eta *= 0.5
        else:
            break
        path.nodes[k] = trial
        for j in (k - 1, k + 1):
            if 1 <= j <= len(path.nodes) - 2:
                path.nodes[j] = (0.25 * path.nodes[j - 1] + 0.5 * path.nodes[j]
                                 + 0.25 * path.nodes[j + 1])
        path.reparametrize(k)

    x, refined = best_x, False
    message = ("path iteration converged" if converged
               else f"path iteration stopped at residual {best_res:.3e}")
    if not converged and cfg.refine:
        polished = _newton_refine(energy, best_x, cfg.tol)
        if polished is not None:
            x, refined = polished, True
            history.record(x, node=-1)
            message = "refined by Newton iteration from the path maximum"
    residual = energy.residual(x)
    ok = residual <= cfg.tol

    positivity = None
    try:
        positivity = positivity_check(problem, nl, lam, dom.dirichlet_function(x))
        x = dom.restrict_interior(positivity.clamped)
        residual = positivity.residual_after_clamp
        ok = ok and residual <= cfg.tol
    except PositivityError as exc:
        positivity = exc.report
        ok = False
        message = str(exc)
    J_value = energy.value(x)
    if J_value <= 0.0:
        ok = False
        message = "critical point has nonpositive energy"
    ps = ps_diagnostics(history)
    return SolutionReport(
        solution=dom.dirichlet_function(x),
        J_value=J_value,
        residual=residual,
        c=c,
        lam=float(lam),
        lambda1=eig.lambda1,
        converged=ok,
        geometry=geometry,
        outer_iterations=outer,
        refined=refined,
        message=message,
        positivity=positivity,
        ps=ps,
        history=history,
    )
