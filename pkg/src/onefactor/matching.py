"""Deterministic matching and coloring primitives.

Hopcroft-Karp bipartite matching with Hall-violator extraction, exact
r-factors via integral max-flow, Misra-Gries edge coloring within the
Vizing bound, perfect matchings from Hamilton cycles under the Dirac
condition, and 1-factorization of regular balanced bipartite graphs.
All tie-breaking is by lowest vertex index, so results are reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import (
    ConstructionFailedError,
    DiracViolatedError,
    InvariantBrokenError,
    NotBipartiteError,
    NotRegularError,
    RequestTooLargeError,
    UnbalancedPartsError,
)
from .graph import (
    Bipartition,
    Edge,
    Factorization,
    Graph,
    Matching,
    _graph_from_canonical,
    canonical_edge,
    remove_edges,
)

_INF = float("inf")


@dataclass(frozen=True)
class HallViolator:
    """A set X on one side with |N(X)| < |X|: no perfect matching exists."""

    side: str  # "a" or "b"
    witness: frozenset[int]
    neighborhood: frozenset[int]


@dataclass(frozen=True)
class Infeasible:
    """Flow certificate that no r-factor exists: max flow fell short."""

    max_flow: int
    required: int
    cut_a: frozenset[int]
    cut_b: frozenset[int]


@dataclass(frozen=True)
class EdgeColoring:
    color_of: dict[Edge, int]
    num_colors: int

    def classes(self) -> list[Matching]:
        """Color classes as matchings, ordered by color index."""
        by_color: dict[int, set[Edge]] = {}
        for e, c in self.color_of.items():
            by_color.setdefault(c, set()).add(e)
        return [Matching(frozenset(by_color[c])) for c in sorted(by_color)]


def _check_crossing(g: Graph, bip: Bipartition) -> None:
    # Vertices outside both sides are allowed as long as they are isolated;
    # every edge must cross. This lets callers pass restricted views on the
    # original index space.
    a, b = bip.side_a, bip.side_b
    for u, v in g.edges:
        if not ((u in a and v in b) or (u in b and v in a)):
            raise NotBipartiteError(f"edge ({u},{v}) does not cross the bipartition")


def _hopcroft_karp(left: list[int], adj: dict[int, list[int]]) -> dict[int, int]:
    """Maximum matching; returns pair_left (left vertex -> right vertex)."""
    pair_left: dict[int, int] = {}
    pair_right: dict[int, int] = {}
    dist: dict[int, float] = {}

    def bfs() -> bool:
        queue: deque[int] = deque()
        for u in left:
            if u not in pair_left:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        reachable_free = False
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                mate = pair_right.get(w)
                if mate is None:
                    reachable_free = True
                elif dist[mate] == _INF:
                    dist[mate] = dist[u] + 1
                    queue.append(mate)
        return reachable_free

    def dfs(u: int) -> bool:
        for w in adj[u]:
            mate = pair_right.get(w)
            if mate is None or (dist[mate] == dist[u] + 1 and dfs(mate)):
                pair_left[u] = w
                pair_right[w] = u
                return True
        dist[u] = _INF
        return False

    while bfs():
        for u in left:
            if u not in pair_left:
                dfs(u)
    return pair_left


def max_bipartite_matching(g: Graph, bip: Bipartition) -> Matching:
    _check_crossing(g, bip)
    left = sorted(bip.side_a)
    adj = {u: sorted(g.neighbors(u)) for u in left}
    pair_left = _hopcroft_karp(left, adj)
    return Matching(frozenset(canonical_edge(u, w) for u, w in pair_left.items()))


def perfect_bipartite_matching(g: Graph, bip: Bipartition):
    """Perfect matching, or a Hall violator extracted from the final
    alternating-reachability cut."""
    if not bip.is_balanced():
        raise UnbalancedPartsError(
            f"parts have sizes {len(bip.side_a)} and {len(bip.side_b)}"
        )
    _check_crossing(g, bip)
    left = sorted(bip.side_a)
    adj = {u: sorted(g.neighbors(u)) for u in left}
    pair_left = _hopcroft_karp(left, adj)
    if len(pair_left) == len(left):
        return Matching(frozenset(canonical_edge(u, w) for u, w in pair_left.items()))

    pair_right = {w: u for u, w in pair_left.items()}
    # Alternating BFS from exposed left vertices: left->right along any edge,
    # right->left along matching edges only.
    exposed = [u for u in left if u not in pair_left]
    seen_l: set[int] = set(exposed)
    seen_r: set[int] = set()
    queue = deque(exposed)
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w in seen_r:
                continue
            seen_r.add(w)
            mate = pair_right.get(w)
            if mate is not None and mate not in seen_l:
                seen_l.add(mate)
                queue.append(mate)
    if len(seen_r) >= len(seen_l):
        raise InvariantBrokenError("alternating cut did not yield a Hall violator")
    return HallViolator("a", frozenset(seen_l), frozenset(seen_r))


class _Dinic:
    def __init__(self, size: int):
        self.size = size
        self.head: list[list[int]] = [[] for _ in range(size)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add(self, u: int, v: int, c: int) -> int:
        idx = len(self.to)
        self.head[u].append(idx)
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(idx + 1)
        self.to.append(u)
        self.cap.append(0)
        return idx

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while True:
            level = [-1] * self.size
            level[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for idx in self.head[u]:
                    if self.cap[idx] > 0 and level[self.to[idx]] < 0:
                        level[self.to[idx]] = level[u] + 1
                        queue.append(self.to[idx])
            if level[t] < 0:
                return flow
            it = [0] * self.size

            def dfs(u: int, pushed: int) -> int:
                if u == t:
                    return pushed
                while it[u] < len(self.head[u]):
                    idx = self.head[u][it[u]]
                    v = self.to[idx]
                    if self.cap[idx] > 0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[idx]))
                        if got:
                            self.cap[idx] -= got
                            self.cap[idx ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, 1 << 60)
                if not pushed:
                    break
                flow += pushed

    def source_side(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for idx in self.head[u]:
                if self.cap[idx] > 0 and self.to[idx] not in seen:
                    seen.add(self.to[idx])
                    queue.append(self.to[idx])
        return seen


def bipartite_r_factor(g: Graph, bip: Bipartition, r: int):
    """Spanning subgraph with every vertex of degree exactly r, via an
    integral feasible flow; Infeasible (with the min cut) when none exists.

    Flow network: source -> each A-vertex at capacity r, unit capacities on
    crossing edges, each B-vertex -> sink at capacity r.
    """
    if not bip.is_balanced():
        raise UnbalancedPartsError(
            f"parts have sizes {len(bip.side_a)} and {len(bip.side_b)}"
        )
    _check_crossing(g, bip)
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return _graph_from_canonical(g.n, ())
    a = sorted(bip.side_a)
    b = sorted(bip.side_b)
    pos_a = {v: i for i, v in enumerate(a)}
    pos_b = {v: i for i, v in enumerate(b)}
    m = len(a)
    source, sink = 0, 1 + 2 * m
    net = _Dinic(2 * m + 2)
    for i in range(m):
        net.add(source, 1 + i, r)
        net.add(1 + m + i, sink, r)
    edge_arcs: list[tuple[Edge, int]] = []
    for u, v in sorted(g.edges):
        if u in pos_a:
            au, bv = u, v
        else:
            au, bv = v, u
        idx = net.add(1 + pos_a[au], 1 + m + pos_b[bv], 1)
        edge_arcs.append((canonical_edge(u, v), idx))
    flow = net.max_flow(source, sink)
    if flow < r * m:
        side = net.source_side(source)
        cut_a = frozenset(a[i] for i in range(m) if 1 + i in side)
        cut_b = frozenset(b[i] for i in range(m) if 1 + m + i in side)
        return Infeasible(flow, r * m, cut_a, cut_b)
    chosen = (e for e, idx in edge_arcs if net.cap[idx] == 0)
    return _graph_from_canonical(g.n, chosen)


def misra_gries_color(g: Graph) -> EdgeColoring:
    """Proper edge coloring with at most max_degree + 1 colors.

    Fan rotation with cd-path inversion; colors are assigned first-fit and
    all choices break ties by lowest index.
    """
    delta = g.max_degree()
    palette = delta + 1
    color_of: dict[Edge, int] = {}
    # vertex -> {color: neighbor over the edge of that color}
    at: list[dict[int, int]] = [dict() for _ in range(g.n)]

    def free_color(v: int) -> int:
        used = at[v]
        for c in range(palette):
            if c not in used:
                return c
        raise InvariantBrokenError("no free color inside the Vizing palette")

    def is_free(v: int, c: int) -> bool:
        return c not in at[v]

    def set_color(u: int, v: int, c: int) -> None:
        at[u][c] = v
        at[v][c] = u
        color_of[canonical_edge(u, v)] = c

    def unset_color(u: int, v: int) -> int:
        c = color_of.pop(canonical_edge(u, v))
        del at[u][c]
        del at[v][c]
        return c

    def invert_cd_path(u: int, c: int, d: int) -> None:
        # Maximal path from u alternating d, c, ...; swapping the two colors
        # along it frees d at u (c stays free at u: the path cannot return).
        path_edges: list[tuple[int, int, int]] = []
        cur, want = u, d
        prev = -1
        while True:
            nxt = at[cur].get(want)
            if nxt is None or nxt == prev:
                break
            path_edges.append((cur, nxt, want))
            prev, cur = cur, nxt
            want = c if want == d else d
        for x, y, _ in path_edges:
            unset_color(x, y)
        for x, y, col in path_edges:
            set_color(x, y, c if col == d else d)

    def build_fan(u: int, v: int) -> list[int]:
        # Maximal: stop only when no free color of the last vertex leads to a
        # fresh colored neighbor of u. Lowest color wins for determinism.
        fan = [v]
        members = {v}
        extended = True
        while extended:
            extended = False
            used_last = at[fan[-1]]
            for cand in range(palette):
                if cand in used_last:
                    continue
                w = at[u].get(cand)
                if w is not None and w not in members:
                    fan.append(w)
                    members.add(w)
                    extended = True
                    break
        return fan

    for u, v in sorted(g.edges):
        fan = build_fan(u, v)
        c = free_color(u)
        d = free_color(fan[-1])
        if not is_free(u, d):
            invert_cd_path(u, c, d)
            # The inversion may shorten the usable fan prefix; walk it again
            # under the new colors and stop at the first vertex where d is free.
            prefix = [fan[0]]
            if not is_free(fan[0], d):
                for w in fan[1:]:
                    cw = color_of.get(canonical_edge(u, w))
                    if cw is None or not is_free(prefix[-1], cw):
                        break
                    prefix.append(w)
                    if is_free(w, d):
                        break
            fan = prefix
            if not is_free(fan[-1], d):
                raise InvariantBrokenError("fan end has no free target color")
        else:
            # d free at both u and fan end: rotate the whole fan.
            pass
        # Rotate: shift each fan edge's color down one position, then color
        # the last fan edge with d.
        shift = [color_of.get(canonical_edge(u, w)) for w in fan]
        for w in fan:
            if canonical_edge(u, w) in color_of:
                unset_color(u, w)
        for i in range(len(fan) - 1):
            set_color(u, fan[i], shift[i + 1])
        set_color(u, fan[-1], d)

    used = len(set(color_of.values())) if color_of else 0
    return EdgeColoring(color_of, used)


def large_matching_via_coloring(g: Graph, k: int) -> Matching:
    """A matching of size exactly k, taken from the largest color class.

    Sizes up to ceil(m / (max_degree + 1)) are always available by
    pigeonhole; larger requests succeed only when the largest class happens
    to be big enough.
    """
    if k < 0:
        raise RequestTooLargeError("negative matching size")
    if k == 0:
        return Matching(frozenset())
    coloring = misra_gries_color(g)
    best: list[Edge] = []
    by_color: dict[int, list[Edge]] = {}
    for e, c in coloring.color_of.items():
        by_color.setdefault(c, []).append(e)
    for c in sorted(by_color):
        if len(by_color[c]) > len(best):
            best = by_color[c]
    if k > len(best):
        raise RequestTooLargeError(
            f"requested {k}, largest color class has {len(best)}"
        )
    return Matching(frozenset(sorted(best)[:k]))


def _dirac_hamilton_cycle(g: Graph) -> list[int]:
    """Hamilton cycle by rotation-extension; valid under the Dirac condition."""
    n = g.n
    budget = max(10_000, 5 * n ** 3)
    steps = 0
    path = [0]
    on_path = {0}

    def tick() -> None:
        nonlocal steps
        steps += 1
        if steps > budget:
            raise ConstructionFailedError("rotation-extension exceeded its step budget")

    while True:
        # Extend greedily at the tail, then at the head.
        extended = True
        while extended:
            extended = False
            tick()
            for w in sorted(g.neighbors(path[-1])):
                if w not in on_path:
                    path.append(w)
                    on_path.add(w)
                    extended = True
                    break
            if not extended:
                for w in sorted(g.neighbors(path[0])):
                    if w not in on_path:
                        path.insert(0, w)
                        on_path.add(w)
                        extended = True
                        break
        k = len(path) - 1
        if len(path) == n and g.has_edge(path[0], path[-1]):
            return path
        # Maximal on both ends: find i with head ~ path[i+1] and tail ~ path[i],
        # guaranteed when deg(head) + deg(tail) >= n.
        head_adj = g.neighbors(path[0])
        tail_adj = g.neighbors(path[-1])
        pivot = -1
        for i in range(k):
            tick()
            if path[i + 1] in head_adj and path[i] in tail_adj:
                pivot = i
                break
        if pivot < 0:
            raise ConstructionFailedError(
                "no crossing pair on a maximal path; Dirac condition violated?"
            )
        cycle = path[: pivot + 1] + path[pivot + 1 :][::-1]
        if len(cycle) == n:
            return cycle
        # Absorb an outside vertex adjacent to the cycle.
        outside = sorted(set(range(n)) - on_path)
        attach = None
        for z in outside:
            tick()
            hits = g.neighbors(z)
            for j, cv in enumerate(cycle):
                if cv in hits:
                    attach = (z, j)
                    break
            if attach:
                break
        if attach is None:
            raise ConstructionFailedError(
                "cycle has no outside neighbor; Dirac condition violated?"
            )
        z, j = attach
        path = [z] + cycle[j:] + cycle[:j]
        on_path = set(path)


def dirac_perfect_matching(g: Graph) -> Matching:
    """Perfect matching from alternate edges of a Dirac Hamilton cycle."""
    if g.n % 2 != 0:
        raise DiracViolatedError(f"odd vertex count {g.n}")
    if g.n == 0:
        return Matching(frozenset())
    if g.min_degree() < g.n / 2:
        raise DiracViolatedError(
            f"min degree {g.min_degree()} below n/2 = {g.n / 2}"
        )
    cycle = _dirac_hamilton_cycle(g)
    pairs = [(cycle[i], cycle[i + 1]) for i in range(0, g.n, 2)]
    return Matching.from_pairs(pairs)


def bipartite_regular_factorize(g: Graph, bip: Bipartition) -> Factorization:
    """Split an r-regular balanced bipartite graph into r perfect matchings
    by repeated perfect matching extraction (Hall guarantees every step)."""
    if not bip.is_balanced():
        raise UnbalancedPartsError(
            f"parts have sizes {len(bip.side_a)} and {len(bip.side_b)}"
        )
    _check_crossing(g, bip)
    r = g.regular_degree()
    if r is None:
        raise NotRegularError(
            f"degrees range {g.min_degree()}..{g.max_degree()}"
        )
    matchings: list[Matching] = []
    residual = g
    for _ in range(r):
        pm = perfect_bipartite_matching(residual, bip)
        if isinstance(pm, HallViolator):
            raise InvariantBrokenError(
                "regular bipartite graph returned a Hall violator"
            )
        matchings.append(pm)
        residual = remove_edges(residual, pm.edges)
    return Factorization(tuple(matchings), g)
