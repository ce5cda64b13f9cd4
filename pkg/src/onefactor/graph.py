"""Immutable simple-graph core: constructors, subgraphs, and factorization checks.

Vertices are dense integers ``0..n-1``; edges are stored canonically as
``(min, max)`` pairs. Graphs never mutate after construction: every
"mutation" returns a new graph, so snapshots of a shrinking graph can be
kept around and shared between concurrent runs without copying.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    DuplicateEdgeError,
    InfeasibleDegreeError,
    RetryBudgetExhaustedError,
    SelfLoopError,
    UnbalancedPartsError,
    UnknownEdgeError,
    UnknownVertexError,
    VertexOutOfRangeError,
)

Edge = tuple[int, int]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``edges`` is a frozenset of canonical pairs and ``neighbors(v)`` a
    frozenset per vertex; the two always describe the same relation.
    """

    __slots__ = ("n", "_edges", "_adj")

    def __init__(self, n: int, edges: frozenset[Edge], adj: tuple[frozenset[int], ...]):
        self.n = n
        self._edges = edges
        self._adj = adj

    @property
    def edges(self) -> frozenset[Edge]:
        return self._edges

    def num_edges(self) -> int:
        return len(self._edges)

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise UnknownVertexError(f"vertex {v} not in 0..{self.n - 1}")

    def neighbors(self, v: int) -> frozenset[int]:
        self.check_vertex(v)
        return self._adj[v]

    def degree(self, v: int) -> int:
        self.check_vertex(v)
        return len(self._adj[v])

    def degrees(self) -> list[int]:
        return [len(s) for s in self._adj]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self._edges

    def min_degree(self) -> int:
        return min(self.degrees()) if self.n else 0

    def max_degree(self) -> int:
        return max(self.degrees()) if self.n else 0

    def is_regular(self) -> bool:
        degs = self.degrees()
        return not degs or min(degs) == max(degs)

    def regular_degree(self) -> int | None:
        """The common degree, or None when the graph is irregular."""
        degs = self.degrees()
        if not degs:
            return None
        d = degs[0]
        return d if all(x == d for x in degs) else None

    def adjacency_sets(self) -> list[set[int]]:
        """Mutable copy of the adjacency structure for algorithm scratch use."""
        return [set(s) for s in self._adj]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph) and self.n == other.n and self._edges == other._edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self._edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={len(self._edges)})"


def _graph_from_canonical(n: int, edges: Iterable[Edge]) -> Graph:
    """Trusted fast path: edges must already be canonical, valid, and unique."""
    edge_set = frozenset(edges)
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edge_set:
        adj[u].add(v)
        adj[v].add(u)
    return Graph(n, edge_set, tuple(frozenset(s) for s in adj))


def from_edge_list(n: int, pairs: Iterable[Sequence[int]]) -> Graph:
    """Build a graph from explicit pairs, rejecting loops, duplicates, and
    out-of-range endpoints."""
    if n < 0:
        raise VertexOutOfRangeError("vertex count must be nonnegative")
    seen: set[Edge] = set()
    for pair in pairs:
        u, v = pair
        if u == v:
            raise SelfLoopError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRangeError(f"edge ({u},{v}) outside 0..{n - 1}")
        e = canonical_edge(u, v)
        if e in seen:
            raise DuplicateEdgeError(f"duplicate edge {e}")
        seen.add(e)
    return _graph_from_canonical(n, seen)


def empty_graph(n: int) -> Graph:
    return _graph_from_canonical(n, ())


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise VertexOutOfRangeError("complete graph needs n >= 1")
    return _graph_from_canonical(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def complete_bipartite(a: int, b: int) -> Graph:
    """K_{a,b} with the canonical split 0..a-1 versus a..a+b-1."""
    if a < 1 or b < 1:
        raise VertexOutOfRangeError("complete bipartite graph needs a,b >= 1")
    return _graph_from_canonical(a + b, ((u, a + w) for u in range(a) for w in range(b)))


def random_regular(n: int, d: int, seed: int, max_retries: int = 500) -> Graph:
    """Uniform-ish d-regular simple graph via the pairing model.

    Stubs are paired in shuffled rounds; pairs that would create a loop or a
    parallel edge return to the pool for the next round. A full restart
    happens only when the leftover stubs cannot possibly be paired.
    Deterministic for a given seed.
    """
    if d >= n or n * d % 2 != 0 or d < 0:
        raise InfeasibleDegreeError(f"no {d}-regular simple graph on {n} vertices")
    if d == 0:
        return empty_graph(n)
    rng = random.Random(seed)

    def suitable(edges: set[Edge], leftover: list[int]) -> bool:
        if not leftover:
            return True
        distinct = sorted(set(leftover))
        for i, u in enumerate(distinct):
            for v in distinct[i + 1 :]:
                if (u, v) not in edges:
                    return True
        return False

    for _ in range(max_retries):
        edges: set[Edge] = set()
        stubs = [v for v in range(n) for _ in range(d)]
        stuck = False
        while stubs:
            rng.shuffle(stubs)
            leftover: list[int] = []
            for i in range(0, len(stubs), 2):
                u, v = stubs[i], stubs[i + 1]
                e = canonical_edge(u, v)
                if u == v or e in edges:
                    leftover.append(u)
                    leftover.append(v)
                else:
                    edges.add(e)
            if not suitable(edges, leftover):
                stuck = True
                break
            stubs = leftover
        if not stuck:
            return _graph_from_canonical(n, edges)
    raise RetryBudgetExhaustedError(
        f"pairing model failed {max_retries} times for (n={n}, d={d})"
    )


def induced_subgraph(g: Graph, vs: Iterable[int]) -> tuple[Graph, list[int]]:
    """Subgraph induced on ``vs`` with order-preserving relabeling.

    Returns the relabeled graph plus the index map ``new -> old``.
    """
    kept = sorted(set(vs))
    for v in kept:
        g.check_vertex(v)
    pos = {old: new for new, old in enumerate(kept)}
    kept_set = set(kept)
    edges = (
        (pos[u], pos[v]) for (u, v) in g.edges if u in kept_set and v in kept_set
    )
    return _graph_from_canonical(len(kept), edges), kept


def remove_edges(g: Graph, es: Iterable[Edge]) -> Graph:
    to_drop = {canonical_edge(u, v) for u, v in es}
    missing = to_drop - g.edges
    if missing:
        raise UnknownEdgeError(f"edges not present: {sorted(missing)[:5]}")
    return _graph_from_canonical(g.n, g.edges - to_drop)


def remove_vertices_edges(g: Graph, vs: Iterable[int]) -> Graph:
    """Drop all edges incident to ``vs`` but keep the vertex set intact.

    Degree-0 survivors keep their indices, which lets callers alternate
    vertex-deletion and edge-deletion on one index space.
    """
    dropped = set(vs)
    for v in dropped:
        g.check_vertex(v)
    return _graph_from_canonical(
        g.n, (e for e in g.edges if e[0] not in dropped and e[1] not in dropped)
    )


def union_graphs(g: Graph, h: Graph) -> Graph:
    if g.n != h.n:
        raise VertexOutOfRangeError("union requires equal vertex counts")
    return _graph_from_canonical(g.n, g.edges | h.edges)


@dataclass(frozen=True)
class Bipartition:
    """A two-sided vertex split; balanced when both sides have equal size."""

    side_a: frozenset[int]
    side_b: frozenset[int]

    def __post_init__(self):
        if self.side_a & self.side_b:
            raise UnbalancedPartsError("bipartition sides overlap")

    def is_balanced(self) -> bool:
        return len(self.side_a) == len(self.side_b)

    @property
    def m(self) -> int:
        return len(self.side_a)

    def covers(self, n: int) -> bool:
        return self.side_a | self.side_b == frozenset(range(n))

    def side_of(self, v: int) -> int:
        if v in self.side_a:
            return 0
        if v in self.side_b:
            return 1
        raise UnknownVertexError(f"vertex {v} on neither side")


def bipartition(side_a: Iterable[int], side_b: Iterable[int]) -> Bipartition:
    a, b = frozenset(side_a), frozenset(side_b)
    return Bipartition(a, b)


def canonical_split(a: int, b: int) -> Bipartition:
    """The bipartition that complete_bipartite(a, b) is built against."""
    return bipartition(range(a), range(a, a + b))


@dataclass(frozen=True)
class Matching:
    """Pairwise vertex-disjoint canonical edges."""

    edges: frozenset[Edge]

    def __post_init__(self):
        seen: set[int] = set()
        for u, v in self.edges:
            if u >= v:
                raise ValueError(f"edge {(u, v)} not canonical")
            if u in seen or v in seen:
                raise ValueError(f"edges share vertex in {(u, v)}")
            seen.add(u)
            seen.add(v)

    @staticmethod
    def from_pairs(pairs: Iterable[Sequence[int]]) -> "Matching":
        return Matching(frozenset(canonical_edge(u, v) for u, v in pairs))

    def vertices(self) -> frozenset[int]:
        return frozenset(x for e in self.edges for x in e)

    def covers(self, v: int) -> bool:
        return any(v in e for e in self.edges)

    def size(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Factorization:
    """Ordered list of edge-disjoint matchings together with their host."""

    matchings: tuple[Matching, ...]
    host: Graph


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    failure: str | None = None
    detail: str = ""


def verify_factorization(g: Graph, f, require_perfect: bool = False) -> VerifyReport:
    """Check that ``f`` partitions E(g) into matchings; report the first violation.

    Accepts a Factorization, a sequence of Matching objects, or raw edge
    collections. Diagnostic only: never raises for a bad factorization.
    """
    if isinstance(f, Factorization):
        raw = [m.edges for m in f.matchings]
    else:
        raw = []
        for m in f:
            raw.append(frozenset(m.edges) if isinstance(m, Matching) else
                       frozenset(canonical_edge(u, v) for u, v in m))

    used: set[Edge] = set()
    for idx, edges in enumerate(raw):
        covered: set[int] = set()
        for u, v in edges:
            if u == v or not (0 <= u < g.n and 0 <= v < g.n):
                return VerifyReport(False, "edge outside graph",
                                    f"matching {idx} has invalid edge {(u, v)}")
            if u in covered or v in covered:
                return VerifyReport(False, "non-matching",
                                    f"matching {idx} repeats a vertex at edge {(u, v)}")
            covered.add(u)
            covered.add(v)
            if canonical_edge(u, v) not in g.edges:
                return VerifyReport(False, "edge outside graph",
                                    f"matching {idx} uses {(u, v)} not in host")
            if canonical_edge(u, v) in used:
                return VerifyReport(False, "edge reuse",
                                    f"edge {(u, v)} appears in two matchings")
            used.add(canonical_edge(u, v))
        if require_perfect and len(covered) != g.n:
            return VerifyReport(False, "not perfect",
                                f"matching {idx} covers {len(covered)} of {g.n} vertices")
    if used != set(g.edges):
        missing = len(g.edges) - len(used)
        return VerifyReport(False, "union mismatch",
                            f"{missing} host edges uncovered" if missing else
                            "extra edges beyond host")
    return VerifyReport(True)
