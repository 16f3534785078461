"""Nonlinear source terms ``f(x, t)`` and their primitives ``F(x, t)``.

Two families are built in, both vanishing for ``t <= 0``:

* ``power``:       ``f = a(x) t^(q-1)``
* ``exponential``: ``f = a(x) t^(q-1) exp(min(t, T)^beta)`` with
  ``beta < p/(p-1)`` and the cap ``T`` keeping values finite.

``theta`` is the Ambrosetti-Rabinowitz exponent, kept separate from the
growth exponent ``q``: for the power family ``q F = f t`` holds with
equality, so the strict condition needs ``theta < q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .graph import DirichletDomain

FAMILIES = ("power", "exponential")

_GL_NODES, _GL_WEIGHTS = leggauss(32)
_GL_PANELS = 16


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    domain: DirichletDomain
    p: float
    q: float
    a: np.ndarray = field(repr=False)
    theta: float | None = None
    s0: float = 1.0
    family: str = "power"
    beta: float = 1.0
    cap: float = 50.0

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if p <= 2.0:
            raise ValueError(f"p must exceed 2, got {p}")
        if q <= p:
            raise ValueError(f"q must exceed p, got q = {q}, p = {p}")
        theta = 0.5 * (p + q) if self.theta is None else float(self.theta)
        if not p < theta <= q:
            raise ValueError(f"theta must lie in (p, q], got {theta}")
        if self.s0 <= 0.0:
            raise ValueError("s0 must be positive")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "exponential" and not 0.0 < self.beta < p / (p - 1.0):
            raise ValueError("beta must lie in (0, p/(p-1))")
        a = np.broadcast_to(np.asarray(self.a, dtype=float), (self.domain.n_interior,)).copy()
        if not np.all(a > 0.0):
            raise ValueError("coefficient a(x) must be positive on the interior")
        a.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "a", a)

    @classmethod
    def power(cls, domain: DirichletDomain, p: float, q: float, a=1.0, **kw) -> "Nonlinearity":
        return cls(domain, p, q, a, family="power", **kw)

    @classmethod
    def exponential(cls, domain: DirichletDomain, p: float, q: float, a=1.0,
                    beta: float = 1.0, **kw) -> "Nonlinearity":
        return cls(domain, p, q, a, family="exponential", beta=beta, **kw)

    # Both evaluators take interior-ordered arrays of t (any sign).

    def f(self, t: np.ndarray) -> np.ndarray:
        tp = np.maximum(t, 0.0)
        out = self.a * tp ** (self.q - 1.0)
        if self.family == "exponential":
            out = out * np.exp(np.minimum(tp, self.cap) ** self.beta)
        return out

    def F(self, t: np.ndarray) -> np.ndarray:
        tp = np.maximum(t, 0.0)
        if self.family == "power":
            return self.a * tp ** self.q / self.q
        return self.a * self._exp_primitive(tp)

    def _exp_integrand(self, s):
        return s ** (self.q - 1.0) * np.exp(s ** self.beta)

    def _exp_primitive(self, t: np.ndarray) -> np.ndarray:
        """``int_0^t s^(q-1) exp(min(s,T)^beta) ds`` by composite Gauss-Legendre."""
        t = np.asarray(t, dtype=float)
        inner = np.minimum(t, self.cap)
        edges = np.linspace(0.0, 1.0, _GL_PANELS + 1)
        total = np.zeros_like(inner)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo) * inner
            mid = (lo + 0.5 * (hi - lo)) * inner
            s = mid[..., None] + half[..., None] * _GL_NODES
            total = total + half * (self._exp_integrand(s) @ _GL_WEIGHTS)
        over = np.maximum(t - self.cap, 0.0)
        tail = np.where(
            over > 0.0,
            math.exp(self.cap ** self.beta) * (t ** self.q - self.cap ** self.q) / self.q,
            0.0,
        )
        return total + tail

    def ar_offset(self, grid: int = 2001) -> np.ndarray:
        """Per-vertex ``sup_{0 <= s <= s0} (F(s) - s f(s) / theta)^+`` on a grid."""
        s = np.linspace(0.0, self.s0, grid)
        worst = np.zeros(self.domain.n_interior)
        for sv in s:
            t = np.full(self.domain.n_interior, sv)
            worst = np.maximum(worst, self.F(t) - sv * self.f(t) / self.theta)
        return worst

    def check_hypotheses(self) -> dict[str, bool]:
        """Numerical spot checks of the structural hypotheses on ``f``.

        * sign: ``f(x, 0) = 0`` and ``f >= 0`` on ``[0, 10^3]``
        * growth: ``f(x, t) exp(-1.01 t^(p/(p-1))) <= 1e-12`` at ``t = 10^3``
        * small_t: ``f(x, t) / t^(p-1) <= 1e-3`` at ``t = 10^-6``
        * ambrosetti_rabinowitz: ``0 < theta F < f s`` on a log grid of
          ``[s0, 10^6]``
        """
        n = self.domain.n_interior

        def at(t):
            return np.full(n, float(t))

        grid = np.linspace(0.0, 1e3, 4001)
        sign = bool(np.all(self.f(at(0.0)) == 0.0)) and all(
            np.all(self.f(at(t)) >= 0.0) for t in grid
        )

        t_big = 1e3
        log_f = (np.log(self.a) + (self.q - 1.0) * math.log(t_big)
                 + (min(t_big, self.cap) ** self.beta if self.family == "exponential" else 0.0))
        growth = bool(np.all(log_f - 1.01 * t_big ** (self.p / (self.p - 1.0))
                             <= math.log(1e-12)))

        t_small = 1e-6
        small_t = bool(np.all(self.f(at(t_small)) / t_small ** (self.p - 1.0) <= 1e-3))

        ar = True
        for s in np.geomspace(self.s0, 1e6, 200):
            F, f = self.F(at(s)), self.f(at(s))
            if not (np.all(0.0 < self.theta * F) and np.all(self.theta * F < f * s)):
                ar = False
                break
        out = {"continuity": True, "sign": sign, "growth": growth,
               "small_t": small_t, "ambrosetti_rabinowitz": ar}
        out["all"] = all(out.values())
        return out

    def describe(self) -> dict:
        d = {"family": self.family, "p": self.p, "q": self.q, "theta": self.theta,
             "s0": self.s0, "a": dict(zip(self.domain.interior, map(float, self.a)))}
        if self.family == "exponential":
            d.update(beta=self.beta, cap=self.cap)
        return d
