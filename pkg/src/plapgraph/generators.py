"""Small graph families and seeded random instances."""

from __future__ import annotations

from collections import deque

import numpy as np

from .graph import DirichletDomain, WeightedGraph, WeightField


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Path on vertices ``v0 - v1 - ... - v{n-1}`` (ids zero-padded so they sort)."""
    names = [f"v{i:03d}" for i in range(n)]
    return WeightedGraph(names, [(names[i], names[i + 1], weight) for i in range(n - 1)])


def lettered_path(n: int) -> WeightedGraph:
    """Unit-weight path ``a - b - c - ...``; PATH3 and PATH4 are ``n = 3, 4``."""
    names = [chr(ord("a") + i) for i in range(n)]
    return WeightedGraph(names, [(names[i], names[i + 1], 1.0) for i in range(n - 1)])


def star_graph(leaves: int) -> WeightedGraph:
    names = ["center"] + [f"leaf{i}" for i in range(leaves)]
    return WeightedGraph(names, [("center", leaf, 1.0) for leaf in names[1:]])


def random_graph(n: int, rng: np.random.Generator, extra_edges: int | None = None,
                 weight_range: tuple[float, float] = (0.5, 2.0)) -> WeightedGraph:
    """Random spanning tree plus ``extra_edges`` chords, uniform weights."""
    names = [f"x{i:03d}" for i in range(n)]
    edges: dict[tuple[int, int], float] = {}
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges[min(a, b), max(a, b)] = float(rng.uniform(*weight_range))
    if extra_edges is None:
        extra_edges = n // 2
    for _ in range(extra_edges):
        a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
        edges.setdefault((min(a, b), max(a, b)), float(rng.uniform(*weight_range)))
    return WeightedGraph(names, [(names[a], names[b], w) for (a, b), w in edges.items()])


def connected_subset(graph: WeightedGraph, size: int, rng: np.random.Generator,
                     seed_vertex: str | None = None) -> list[str]:
    """Grow a connected vertex set of ``size`` vertices by random BFS."""
    start = seed_vertex or graph.vertices[int(rng.integers(len(graph.vertices)))]
    chosen, frontier = [start], deque([start])
    seen = {start}
    while frontier and len(chosen) < size:
        x = frontier.popleft()
        nbrs = [y for y, _ in graph.neighbors[x] if y not in seen]
        for k in rng.permutation(len(nbrs)):
            if len(chosen) == size:
                break
            y = nbrs[int(k)]
            seen.add(y)
            chosen.append(y)
            frontier.append(y)
    return chosen


def random_domain(graph: WeightedGraph, interior_size: int,
                  rng: np.random.Generator) -> DirichletDomain:
    """Connected interior that leaves at least one vertex for the boundary."""
    size = min(interior_size, len(graph.vertices) - 1)
    return DirichletDomain(graph, connected_subset(graph, size, rng))


def random_weight(domain: DirichletDomain, rng: np.random.Generator,
                  negative_fraction: float = 0.4, low: float = -1.0,
                  high: float = 2.0) -> WeightField:
    """Indefinite weight; at least one interior vertex stays positive."""
    n = domain.n_interior
    vals = rng.uniform(0.1, high, n)
    neg = rng.random(n) < negative_fraction
    vals[neg] = rng.uniform(low, -0.05, int(neg.sum()))
    if np.all(vals <= 0.0):
        vals[int(rng.integers(n))] = float(rng.uniform(0.1, high))
    return WeightField(domain, vals)
