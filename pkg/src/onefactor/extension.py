"""Extend near-spanning matchings of the outer part to perfect matchings.

Each input matching lives inside H[U]. Its uncovered outer vertices are
greedily paired with distinct reservoir vertices over unused edges, and
the reservoir remainder is finished with a perfect matching obtained from
a Hamilton cycle (the reservoir stays above the half-degree threshold by
hypothesis). Consumed edges are tracked globally so the outputs stay
pairwise edge-disjoint, and each output restricted to H[U] is exactly its
input matching.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DiracViolatedError, GreedyStuckError, InvariantBrokenError
from .graph import Edge, Graph, Matching, _graph_from_canonical, canonical_edge, induced_subgraph
from .matching import dirac_perfect_matching


@dataclass
class ExtensionInstance:
    h: Graph
    u_side: frozenset[int]
    w_side: frozenset[int]
    matchings: tuple[Matching, ...]
    used_edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        if self.u_side & self.w_side:
            raise InvariantBrokenError("outer and reservoir sets overlap")
        if len(self.w_side) % 2 != 0:
            raise InvariantBrokenError("reservoir size must be even")


@dataclass(frozen=True)
class HypothesisThresholds:
    """Caller-supplied numeric thresholds; None skips a check."""

    min_reservoir_degree: float | None = None   # delta(H[W]) lower bound
    min_edges_into_reservoir: float | None = None
    max_uncovered_per_matching: float | None = None
    max_misses_per_vertex: float | None = None
    max_matchings: float | None = None


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[tuple[str, bool, float, float], ...]  # name, ok, actual, bound

    @property
    def all_ok(self) -> bool:
        return all(ok for _, ok, _, _ in self.checks)


@dataclass(frozen=True)
class ExtensionResult:
    matchings: tuple[Matching, ...]
    report: HypothesisReport
    used_edges: frozenset[Edge]


def _check_hypotheses(
    inst: ExtensionInstance, thresholds: HypothesisThresholds, slack: float
) -> HypothesisReport:
    checks: list[tuple[str, bool, float, float]] = []
    w = inst.w_side
    if thresholds.min_reservoir_degree is not None:
        low = min(
            (len(inst.h.neighbors(v) & w) for v in w), default=0
        )
        bound = thresholds.min_reservoir_degree / slack
        checks.append(("reservoir_min_degree", low >= bound, low, bound))
    if thresholds.min_edges_into_reservoir is not None:
        low = min(
            (len(inst.h.neighbors(u) & w) for u in inst.u_side), default=0
        )
        bound = thresholds.min_edges_into_reservoir / slack
        checks.append(("edges_into_reservoir", low >= bound, low, bound))
    if thresholds.max_uncovered_per_matching is not None:
        worst = 0
        for m in inst.matchings:
            covered = m.vertices()
            worst = max(worst, len(inst.u_side - covered))
        bound = thresholds.max_uncovered_per_matching * slack
        checks.append(("uncovered_per_matching", worst <= bound, worst, bound))
    if thresholds.max_misses_per_vertex is not None:
        misses = {u: 0 for u in inst.u_side}
        for m in inst.matchings:
            covered = m.vertices()
            for u in inst.u_side:
                if u not in covered:
                    misses[u] += 1
        worst = max(misses.values(), default=0)
        bound = thresholds.max_misses_per_vertex * slack
        checks.append(("misses_per_vertex", worst <= bound, worst, bound))
    if thresholds.max_matchings is not None:
        bound = thresholds.max_matchings * slack
        checks.append(
            ("matching_count", len(inst.matchings) <= bound,
             len(inst.matchings), bound)
        )
    return HypothesisReport(tuple(checks))


def extend_all(
    inst: ExtensionInstance,
    thresholds: HypothesisThresholds | None = None,
    hypothesis_slack: float = 1.0,
) -> ExtensionResult:
    """Extend every matching in order; raises GreedyStuckError or
    DiracViolatedError (each carrying the failing index) when an extension
    step runs out of room. Hypothesis checks are reported, not enforced.
    """
    report = _check_hypotheses(
        inst, thresholds or HypothesisThresholds(), hypothesis_slack
    )
    used: set[Edge] = set(inst.used_edges)
    w_sorted = sorted(inst.w_side)
    adj = inst.h.adjacency_sets()
    for e in used:
        adj[e[0]].discard(e[1])
        adj[e[1]].discard(e[0])

    outputs: list[Matching] = []
    for idx, m in enumerate(inst.matchings):
        for e in m.edges:
            if e[0] not in inst.u_side or e[1] not in inst.u_side:
                raise InvariantBrokenError(
                    f"matching {idx} leaves the outer set at edge {e}"
                )
        uncovered = sorted(inst.u_side - m.vertices())
        assigned: dict[int, int] = {}
        taken: set[int] = set()
        for u in uncovered:
            pick = None
            for w in w_sorted:
                if w in taken:
                    continue
                if w in adj[u]:
                    pick = w
                    break
            if pick is None:
                raise GreedyStuckError(
                    f"no unused reservoir edge for vertex {u} in matching {idx}",
                    index=idx,
                    vertex=u,
                )
            assigned[u] = pick
            taken.add(pick)

        w_rest = sorted(inst.w_side - taken)
        if w_rest:
            sub_edges = [
                (a, b)
                for a in w_rest
                for b in adj[a]
                if b > a and b in inst.w_side and b not in taken
            ]
            sub = _graph_from_canonical(inst.h.n, sub_edges)
            restricted, index_map = induced_subgraph(sub, w_rest)
            half = len(w_rest) / 2
            if restricted.min_degree() < half:
                raise DiracViolatedError(
                    f"reservoir remainder min degree {restricted.min_degree()} "
                    f"below {half} while extending matching {idx}",
                    index=idx,
                )
            inner = dirac_perfect_matching(restricted)
            reservoir_pm = [
                canonical_edge(index_map[a], index_map[b]) for a, b in inner.edges
            ]
        else:
            reservoir_pm = []

        new_edges = [canonical_edge(u, w) for u, w in assigned.items()] + reservoir_pm
        full = Matching(frozenset(m.edges) | frozenset(new_edges))
        if full.vertices() != inst.u_side | inst.w_side:
            raise InvariantBrokenError(f"extension of matching {idx} is not perfect")
        for e in new_edges:
            if e in used:
                raise InvariantBrokenError(f"edge {e} reused while extending {idx}")
            used.add(e)
            adj[e[0]].discard(e[1])
            adj[e[1]].discard(e[0])
        # restriction law: dropping the new edges must give back the input
        back = frozenset(e for e in full.edges
                         if e[0] in inst.u_side and e[1] in inst.u_side)
        if back != m.edges:
            raise InvariantBrokenError(f"restriction law broken at matching {idx}")
        outputs.append(full)
    return ExtensionResult(tuple(outputs), report, frozenset(used))


def canonical_collection(matchings) -> tuple[tuple[Edge, ...], ...]:
    """Order-free normal form of a matching collection (for distinctness)."""
    return tuple(sorted(tuple(sorted(m.edges)) for m in matchings))


def check_distinctness(
    inputs_a, inputs_b, outputs_a, outputs_b
) -> bool:
    """True iff the two output collections differ; meaningful when the input
    collections were distinct (then the restriction law forces truth)."""
    return canonical_collection(outputs_a) != canonical_collection(outputs_b)
