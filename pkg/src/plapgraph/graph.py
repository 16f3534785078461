"""Weighted graphs, Dirichlet domains and functions on their vertices.

Vertex ids are opaque strings and every container keeps vertices in
lexicographic order, so array positions are reproducible across runs.
Integrals use :func:`math.fsum`, which is exactly rounded and therefore
independent of accumulation order.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import jsonschema
import numpy as np


class GraphError(ValueError):
    """Invalid graph, domain or vertex-function data."""


GRAPH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["vertices", "edges", "interior"],
    "properties": {
        "vertices": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "edges": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"type": "string"},
                    {"type": "string"},
                    {"type": "number"},
                ],
                "items": False,
                "minItems": 3,
            },
        },
        "interior": {"type": "array", "items": {"type": "string"}},
    },
}

WEIGHT_SCHEMA = {
    "type": "object",
    "required": ["K"],
    "properties": {
        "K": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

FUNCTION_SCHEMA = {
    "type": "object",
    "required": ["u"],
    "properties": {
        "u": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def _as_document(document, schema) -> dict:
    if isinstance(document, (str, bytes, bytearray)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GraphError(f"malformed JSON document: {exc}") from exc
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as exc:
        raise GraphError(f"document does not match schema: {exc.message}") from exc
    return document


class WeightedGraph:
    """Connected, undirected graph with symmetric positive edge weights.

    ``mu[x]`` is the vertex measure, the sum of the weights of the edges
    at ``x``.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str, float]]):
        vertices = list(vertices)
        if len(set(vertices)) != len(vertices):
            raise GraphError("duplicate vertex id")
        if not vertices:
            raise GraphError("graph has no vertices")
        self.vertices: tuple[str, ...] = tuple(sorted(vertices))
        known = set(self.vertices)

        weights: dict[tuple[str, str], float] = {}
        for x, y, w in edges:
            if x not in known or y not in known:
                missing = x if x not in known else y
                raise GraphError(f"unknown vertex referenced: {missing!r}")
            if x == y:
                raise GraphError(f"self-loop at {x!r}")
            w = float(w)
            if not math.isfinite(w) or w <= 0.0:
                raise GraphError(f"nonpositive weight on edge ({x!r}, {y!r}): {w}")
            key = (x, y) if x < y else (y, x)
            if key in weights and weights[key] != w:
                raise GraphError(f"asymmetric duplicate edge ({x!r}, {y!r})")
            weights[key] = w

        self.edges: tuple[tuple[str, str, float], ...] = tuple(
            (x, y, w) for (x, y), w in sorted(weights.items())
        )
        nbrs: dict[str, list[tuple[str, float]]] = {v: [] for v in self.vertices}
        for x, y, w in self.edges:
            nbrs[x].append((y, w))
            nbrs[y].append((x, w))
        self.neighbors: dict[str, tuple[tuple[str, float], ...]] = {
            v: tuple(sorted(n)) for v, n in nbrs.items()
        }
        self.mu: dict[str, float] = {v: self._measure(v) for v in self.vertices}
        if not self._connected():
            raise GraphError("graph is disconnected")

    def _measure(self, x: str) -> float:
        return math.fsum(w for _, w in self.neighbors[x])

    def _connected(self) -> bool:
        start = self.vertices[0]
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y, _ in self.neighbors[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return len(seen) == len(self.vertices)

    def weight(self, x: str, y: str) -> float:
        for z, w in self.neighbors[x]:
            if z == y:
                return w
        raise KeyError((x, y))

    def check_measure(self) -> bool:
        """Recompute every vertex measure and compare bit-for-bit."""
        return all(self._measure(v) == self.mu[v] for v in self.vertices)

    def __repr__(self) -> str:
        return f"WeightedGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"


class DirichletDomain:
    """Interior vertex set together with its exterior vertex boundary.

    The boundary is every vertex outside the interior that has a neighbour
    in it; the closure is the union of both.  Index arrays are relative to
    the lexicographically ordered closure.
    """

    def __init__(self, graph: WeightedGraph, interior: Iterable[str]):
        interior = set(interior)
        if not interior:
            raise GraphError("interior is empty")
        unknown = interior.difference(graph.vertices)
        if unknown:
            raise GraphError(f"unknown vertex referenced: {sorted(unknown)[0]!r}")
        self.graph = graph
        self.interior: tuple[str, ...] = tuple(sorted(interior))
        boundary = {
            y for x in self.interior for y, _ in graph.neighbors[x] if y not in interior
        }
        self.boundary: tuple[str, ...] = tuple(sorted(boundary))
        self.closure: tuple[str, ...] = tuple(sorted(interior | boundary))

        index = {v: i for i, v in enumerate(self.closure)}
        self.index: dict[str, int] = index
        self.interior_idx = np.array([index[v] for v in self.interior], dtype=np.intp)
        self.boundary_idx = np.array([index[v] for v in self.boundary], dtype=np.intp)
        self.mu = np.array([graph.mu[v] for v in self.closure])
        self.mu_interior = self.mu[self.interior_idx]

        # edges with both endpoints in the closure; the only ones that ever
        # enter a gradient computation
        src, dst, w = [], [], []
        for x, y, wt in graph.edges:
            if x in index and y in index:
                src.append(index[x])
                dst.append(index[y])
                w.append(wt)
        self.edge_src = np.array(src, dtype=np.intp)
        self.edge_dst = np.array(dst, dtype=np.intp)
        self.edge_w = np.array(w, dtype=float)
        for arr in (self.interior_idx, self.boundary_idx, self.mu, self.mu_interior,
                    self.edge_src, self.edge_dst, self.edge_w):
            arr.flags.writeable = False

    @property
    def n_closure(self) -> int:
        return len(self.closure)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def extend(self, interior_values) -> np.ndarray:
        """Zero-extend an interior-ordered array to the closure."""
        out = np.zeros(self.n_closure)
        out[self.interior_idx] = interior_values
        return out

    def function(self, values) -> "VertexFunction":
        """Closure function from a mapping or a closure-ordered array."""
        if isinstance(values, Mapping):
            missing = set(self.closure).difference(values)
            extra = set(values).difference(self.closure)
            if extra:
                raise GraphError(f"value given outside the closure: {sorted(extra)[0]!r}")
            if missing:
                raise GraphError(f"no value for vertex {sorted(missing)[0]!r}")
            arr = np.array([float(values[v]) for v in self.closure])
        else:
            arr = np.asarray(values, dtype=float)
            if arr.shape != (self.n_closure,):
                raise GraphError(
                    f"expected {self.n_closure} closure values, got shape {arr.shape}"
                )
        dirichlet = bool(np.all(arr[self.boundary_idx] == 0.0))
        return VertexFunction(self.closure, arr, dirichlet)

    def dirichlet_function(self, interior_values) -> "VertexFunction":
        """Closure function vanishing on the boundary."""
        if isinstance(interior_values, Mapping):
            extra = set(interior_values).difference(self.interior)
            if extra:
                raise GraphError(f"not an interior vertex: {sorted(extra)[0]!r}")
            interior_values = [float(interior_values.get(v, 0.0)) for v in self.interior]
        arr = np.asarray(interior_values, dtype=float)
        if arr.shape != (self.n_interior,):
            raise GraphError(f"expected {self.n_interior} interior values")
        return VertexFunction(self.closure, self.extend(arr), True)

    def interior_function(self, values) -> "VertexFunction":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.n_interior,):
            raise GraphError(f"expected {self.n_interior} interior values")
        return VertexFunction(self.interior, arr, False)

    def restrict_interior(self, u: "VertexFunction") -> np.ndarray:
        """Interior-ordered values of a closure or interior function."""
        if u.vertices == self.closure:
            return u.values[self.interior_idx]
        if u.vertices == self.interior:
            return u.values
        raise GraphError("function is not defined on this domain")

    def closure_values(self, u: "VertexFunction") -> np.ndarray:
        if u.vertices != self.closure:
            raise GraphError("function is not defined on the closure of this domain")
        return u.values

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DirichletDomain)
            and other.graph is self.graph
            and other.interior == self.interior
        )

    def __hash__(self) -> int:
        return hash((id(self.graph), self.interior))

    def __repr__(self) -> str:
        return f"DirichletDomain(interior={list(self.interior)}, boundary={list(self.boundary)})"


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """Real values on an ordered vertex tuple; read-only.

    ``dirichlet`` is meaningful for closure functions only and records that
    every boundary value is exactly zero.
    """

    vertices: tuple[str, ...]
    values: np.ndarray
    dirichlet: bool = False

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (len(self.vertices),):
            raise GraphError("values do not match vertices")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def __getitem__(self, vertex: str) -> float:
        try:
            return float(self.values[self._index[vertex]])
        except KeyError:
            raise KeyError(f"function is not defined at {vertex!r}") from None

    def __len__(self) -> int:
        return len(self.vertices)

    def as_dict(self) -> dict[str, float]:
        return {v: float(x) for v, x in zip(self.vertices, self.values)}

    def _like(self, values, dirichlet=None) -> "VertexFunction":
        return VertexFunction(self.vertices, values,
                              self.dirichlet if dirichlet is None else dirichlet)

    def __add__(self, other: "VertexFunction") -> "VertexFunction":
        if other.vertices != self.vertices:
            raise GraphError("functions live on different vertex sets")
        return self._like(self.values + other.values, self.dirichlet and other.dirichlet)

    def __mul__(self, scalar: float) -> "VertexFunction":
        return self._like(float(scalar) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "VertexFunction":
        return self._like(-self.values)


@dataclass(frozen=True, eq=False)
class WeightField:
    """Sign-changing weight ``K`` on the interior; needs ``K > 0`` somewhere."""

    domain: DirichletDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (self.domain.n_interior,):
            raise GraphError("weight must give one value per interior vertex")
        if not np.all(np.isfinite(arr)):
            raise GraphError("weight values must be finite")
        if not np.any(arr > 0.0):
            raise GraphError("weight has no positive part on the interior")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_mapping(cls, domain: DirichletDomain, mapping: Mapping[str, float]) -> "WeightField":
        keys = set(mapping)
        if keys != set(domain.interior):
            extra = sorted(keys.difference(domain.interior))
            missing = sorted(set(domain.interior).difference(keys))
            if extra:
                raise GraphError(f"weight given at non-interior vertex {extra[0]!r}")
            raise GraphError(f"weight missing at interior vertex {missing[0]!r}")
        return cls(domain, [float(mapping[v]) for v in domain.interior])

    @property
    def positive(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def negative(self) -> np.ndarray:
        return np.maximum(-self.values, 0.0)

    def __getitem__(self, vertex: str) -> float:
        return float(self.values[self.domain.interior.index(vertex)])

    def scaled(self, c: float) -> "WeightField":
        return WeightField(self.domain, c * self.values)

    def restricted(self, domain: DirichletDomain) -> "WeightField":
        """Same weight on a sub-domain whose interior is contained in ours."""
        lookup = dict(zip(self.domain.interior, self.values))
        try:
            return WeightField(domain, [lookup[v] for v in domain.interior])
        except KeyError as exc:
            raise GraphError(f"weight undefined at {exc.args[0]!r}") from None

    def as_dict(self) -> dict[str, float]:
        return {v: float(k) for v, k in zip(self.domain.interior, self.values)}


def load_graph(document) -> tuple[WeightedGraph, DirichletDomain]:
    """Parse a graph document (JSON text or decoded mapping)."""
    doc = _as_document(document, GRAPH_SCHEMA)
    graph = WeightedGraph(doc["vertices"], [tuple(e) for e in doc["edges"]])
    return graph, DirichletDomain(graph, doc["interior"])


def load_weight(document, domain: DirichletDomain) -> WeightField:
    doc = _as_document(document, WEIGHT_SCHEMA)
    return WeightField.from_mapping(domain, doc["K"])


def load_function(document, domain: DirichletDomain) -> VertexFunction:
    doc = _as_document(document, FUNCTION_SCHEMA)
    return domain.function(doc["u"])


def graph_document(graph: WeightedGraph, interior: Iterable[str]) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [[x, y, w] for x, y, w in graph.edges],
        "interior": sorted(interior),
    }


def integral(domain: DirichletDomain, u: VertexFunction) -> float:
    """Sum of ``mu(x) u(x)`` over the vertices where ``u`` is defined.

    Closure functions integrate over the closure, interior functions over
    the interior.
    """
    if u.vertices == domain.closure:
        mu = domain.mu
    elif u.vertices == domain.interior:
        mu = domain.mu_interior
    else:
        raise GraphError("function is not defined on this domain")
    return math.fsum(mu * u.values)


def volume(domain: DirichletDomain) -> float:
    return math.fsum(domain.mu)


def positive_part(u: VertexFunction) -> VertexFunction:
    return u._like(np.maximum(u.values, 0.0))


def negative_part(u: VertexFunction) -> VertexFunction:
    return u._like(np.minimum(u.values, 0.0))
