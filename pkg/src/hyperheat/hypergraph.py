"""Weighted hypergraph data model, validation, connectivity, and JSON serialization.

Vertices are indexed 0..n+m-1 with the n free vertices first and the m
pinned vertices last.  Input files may list vertices in any order; the
loader permutes them to this canonical order and records the permutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateVertexInEdge,
    EmptyEdge,
    IndexOutOfRange,
    NonPositiveWeight,
    NoPinnedVertices,
    ParseError,
    SingletonEdge,
)


@dataclass(frozen=True)
class GraphArrays:
    """Flat edge-membership arrays shared with the numeric kernels."""

    members: np.ndarray  # int64, concatenated vertex ids of all edges
    offsets: np.ndarray  # int64, edge e spans members[offsets[e]:offsets[e+1]]
    weights: np.ndarray  # float64, one positive weight per edge


@dataclass(frozen=True)
class Hypergraph:
    """Immutable hypergraph with free vertices 0..n-1 and pinned vertices n..n+m-1."""

    n_free: int
    m_pinned: int
    edges: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    names: tuple[str, ...] = ()
    file_order: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(sorted(e)) for e in self.edges))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"v{i}" for i in range(self.n_vertices))
            )

    @property
    def n_vertices(self) -> int:
        return self.n_free + self.m_pinned

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def max_weight(self) -> float:
        return max(self.weights)

    def min_weight(self) -> float:
        return min(self.weights)

    def arrays(self) -> GraphArrays:
        cached = getattr(self, "_arrays_cache", None)
        if cached is not None:
            return cached
        members = []
        offsets = [0]
        for e in self.edges:
            members.extend(e)
            offsets.append(len(members))
        arr = GraphArrays(
            members=np.asarray(members, dtype=np.int64),
            offsets=np.asarray(offsets, dtype=np.int64),
            weights=np.asarray(self.weights, dtype=np.float64),
        )
        object.__setattr__(self, "_arrays_cache", arr)
        return arr


def validate(g: Hypergraph, allow_unpinned: bool = False) -> None:
    """Raise a ValidationError naming the offending edge if any invariant fails."""
    if len(g.weights) != len(g.edges):
        raise ParseError(
            f"{len(g.edges)} edges but {len(g.weights)} weights"
        )
    if g.m_pinned < 1 and not allow_unpinned:
        raise NoPinnedVertices("at least one pinned vertex is required")
    nv = g.n_vertices
    for idx, (e, w) in enumerate(zip(g.edges, g.weights)):
        if len(e) == 0:
            raise EmptyEdge(f"edge {idx} is empty", edge_index=idx)
        if len(set(e)) != len(e):
            raise DuplicateVertexInEdge(
                f"edge {idx} repeats a vertex", edge_index=idx
            )
        if len(e) < 2:
            raise SingletonEdge(
                f"edge {idx} has fewer than two vertices", edge_index=idx
            )
        if any(v < 0 or v >= nv for v in e):
            raise IndexOutOfRange(
                f"edge {idx} references a vertex outside [0, {nv})", edge_index=idx
            )
        if not (w > 0.0) or not np.isfinite(w):
            raise NonPositiveWeight(
                f"edge {idx} has non-positive weight {w}", edge_index=idx
            )


def components(g: Hypergraph) -> list[list[int]]:
    """Connected components as sorted vertex lists, via BFS on the incidence graph."""
    nv = g.n_vertices
    vertex_edges: list[list[int]] = [[] for _ in range(nv)]
    for ei, e in enumerate(g.edges):
        for v in e:
            vertex_edges[v].append(ei)
    seen = [False] * nv
    out = []
    for start in range(nv):
        if seen[start]:
            continue
        comp = []
        stack = [start]
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for ei in vertex_edges[v]:
                for u in g.edges[ei]:
                    if not seen[u]:
                        seen[u] = True
                        stack.append(u)
        out.append(sorted(comp))
    return out


def is_connected(g: Hypergraph) -> bool:
    """True iff every vertex pair is joined by a chain of overlapping edges."""
    return len(components(g)) == 1


def load(text: str) -> Hypergraph:
    """Parse the JSON document format into a canonically ordered Hypergraph.

    Document schema::

        {"vertices": [names...], "pinned": [names...],
         "edges": [{"members": [names...], "weight": w}, ...]}

    Free vertices keep their file order, pinned vertices follow in file
    order; ``file_order[i]`` is the file position of canonical vertex i.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    for key in ("vertices", "pinned", "edges"):
        if key not in doc:
            raise ParseError(f"missing field '{key}'")
    vertices = doc["vertices"]
    if len(set(vertices)) != len(vertices):
        raise ParseError("vertex names are not unique")
    pinned = doc["pinned"]
    unknown = [p for p in pinned if p not in vertices]
    if unknown:
        raise ParseError(f"pinned names not declared as vertices: {unknown}")
    if len(set(pinned)) != len(pinned):
        raise ParseError("pinned names are not unique")
    pinned_set = set(pinned)
    free = [v for v in vertices if v not in pinned_set]
    ordered = free + [v for v in vertices if v in pinned_set]
    index = {name: i for i, name in enumerate(ordered)}
    file_pos = {name: i for i, name in enumerate(vertices)}

    edges = []
    weights = []
    for ei, rec in enumerate(doc["edges"]):
        if "members" not in rec or "weight" not in rec:
            raise ParseError(f"edge {ei}: needs 'members' and 'weight'")
        try:
            members = [index[name] for name in rec["members"]]
        except KeyError as exc:
            raise ParseError(f"edge {ei}: unknown vertex {exc}") from exc
        w = rec["weight"]
        if not isinstance(w, (int, float)):
            raise ParseError(f"edge {ei}: weight must be a number")
        edges.append(tuple(members))
        weights.append(float(w))

    g = Hypergraph(
        n_free=len(free),
        m_pinned=len(pinned_set),
        edges=tuple(edges),
        weights=tuple(weights),
        names=tuple(ordered),
        file_order=tuple(file_pos[name] for name in ordered),
    )
    validate(g, allow_unpinned=True)
    return g


def save(g: Hypergraph) -> str:
    """Serialize to the JSON document format; load(save(g)) == g."""
    doc = {
        "vertices": list(g.names),
        "pinned": list(g.names[g.n_free :]),
        "edges": [
            {"members": [g.names[v] for v in e], "weight": w}
            for e, w in zip(g.edges, g.weights)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
