"""Multi-stage randomized nibble edge coloring.

Each stage selects a small random bite of the uncolored edges (each
endpoint picks each incident edge independently with probability tau/2),
draws tentative colors from per-edge palettes, keeps the conflict-free
ones, and shrinks palettes accordingly. The color classes that accumulate
are edge-disjoint matchings covering most vertices, with near-equitable
per-vertex miss counts. A trajectory predictor and invariant checkers
support empirical validation of the concentration behaviour.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import DomainError
from .graph import Edge, Graph, Matching, canonical_edge


def p_tau(tau: float) -> float:
    """Per-stage probability that an edge is selected and survives:
    tau*(1 - tau/4)*exp(-2*tau*(1 - tau/4))."""
    if not 0 < tau < 1:
        raise DomainError(f"tau must be in (0,1), got {tau}")
    q = tau * (1 - tau / 4)
    return q * math.exp(-2 * q)


def t_tau(tau: float) -> int:
    """Stage count ceil((1/p_tau) * ln(4/tau)); the residual degree is then
    at most tau*Delta/4."""
    return math.ceil(math.log(4 / tau) / p_tau(tau))


@dataclass(frozen=True)
class NibbleParams:
    tau: float
    delta: int | None = None        # palette size; defaults to min degree
    stage_cap: int | None = None
    slack: float = 1.0
    big_k: float = 1.0              # K in the error recurrence constant C = 1 + K*tau
    little_c: float = 1.0           # c in the sqrt(log n / a_i) term

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise DomainError(f"tau must be in (0,1), got {self.tau}")
        if self.delta is not None and self.delta < 0:
            raise DomainError("palette size must be nonnegative")
        if self.slack < 1:
            raise DomainError("slack must be >= 1")


@dataclass
class StageLogRow:
    stage: int
    edges_colored: int
    min_vertex_palette: int
    max_vertex_palette: int
    min_edge_palette: int
    max_edge_palette: int
    predicted_d: float
    predicted_a: float


class NibbleState:
    """Live coloring state: remaining graph, palettes, and per-(vertex,color)
    counters, all maintained incrementally.

    Invariants (checkable from scratch): the palette of an uncolored edge uv
    equals the intersection of the endpoint palettes, and counters[u][c]
    counts remaining-graph neighbors of u that still hold color c.
    """

    def __init__(self, g: Graph, delta: int):
        self.n = g.n
        self.delta = delta
        self.colors = range(delta)
        self.remaining: list[set[int]] = g.adjacency_sets()
        self.vertex_palette: list[set[int]] = [set(self.colors) for _ in range(g.n)]
        self.edge_palette: dict[Edge, set[int]] = {
            e: set(self.colors) for e in g.edges
        }
        self.color_deg: list[dict[int, int]] = [
            {c: len(self.remaining[v]) for c in self.colors} for v in range(g.n)
        ]
        self.classes: dict[int, set[Edge]] = {c: set() for c in self.colors}
        self.stage = 0

    def remaining_edges(self) -> list[Edge]:
        return [
            (u, v)
            for u in range(self.n)
            for v in sorted(self.remaining[u])
            if u < v
        ]

    def recompute_color_deg(self) -> list[dict[int, int]]:
        """From-scratch counter recomputation (test/debug oracle)."""
        fresh: list[dict[int, int]] = [dict() for _ in range(self.n)]
        for u in range(self.n):
            counts = {c: 0 for c in self.colors}
            for w in self.remaining[u]:
                for c in self.vertex_palette[w]:
                    counts[c] += 1
            fresh[u] = counts
        return fresh


def nibble_stage(state: NibbleState, params: NibbleParams, rng: random.Random) -> int:
    """One stage; mutates state in place and returns edges colored.

    Edges are visited in sorted order so the rng stream, and hence the whole
    run, is a pure function of the seed. Selected edges whose palette is
    already empty skip the color draw and stay uncolored.
    """
    half = params.tau / 2
    edges = state.remaining_edges()
    selected: list[Edge] = []
    for e in edges:
        picked_u = rng.random() < half
        picked_v = rng.random() < half
        if picked_u or picked_v:
            selected.append(e)

    tentative: dict[Edge, int] = {}
    for e in selected:
        pal = state.edge_palette[e]
        if pal:
            tentative[e] = sorted(pal)[rng.randrange(len(pal))]

    # An edge keeps its tentative color unless an incident edge drew the same.
    tally: dict[tuple[int, int], int] = {}
    for (u, v), c in tentative.items():
        tally[(u, c)] = tally.get((u, c), 0) + 1
        tally[(v, c)] = tally.get((v, c), 0) + 1
    finals = [
        (e, c)
        for e, c in tentative.items()
        if tally[(e[0], c)] == 1 and tally[(e[1], c)] == 1
    ]

    # Phase 1: pull finalized edges out of the remaining graph; counters see
    # the edge removals against the old palettes.
    for (u, v), c in finals:
        state.classes[c].add((u, v))
        state.remaining[u].discard(v)
        state.remaining[v].discard(u)
        del state.edge_palette[(u, v)]
        for col in state.vertex_palette[v]:
            state.color_deg[u][col] -= 1
        for col in state.vertex_palette[u]:
            state.color_deg[v][col] -= 1

    # Phase 2: finalized colors leave the endpoint palettes; counters and
    # surviving edge palettes see the palette shrink against the new graph.
    for (u, v), c in finals:
        for x in (u, v):
            if c in state.vertex_palette[x]:
                state.vertex_palette[x].remove(c)
                for w in state.remaining[x]:
                    state.color_deg[w][c] -= 1
                    state.edge_palette[canonical_edge(x, w)].discard(c)

    state.stage += 1
    return len(finals)


@dataclass(frozen=True)
class NibbleOutcome:
    n: int
    delta: int
    tau: float
    matchings: tuple[Matching, ...]
    leftover: frozenset[Edge]
    uncovered_count: dict[int, int]
    stage_log: tuple[StageLogRow, ...]
    active_vertices: frozenset[int]   # vertices with positive input degree

    def canonical_text(self) -> str:
        """Stable serialization used for byte-exact determinism checks."""
        lines = [f"n={self.n} delta={self.delta} tau={self.tau!r}"]
        for idx, m in enumerate(self.matchings):
            body = " ".join(f"{u}-{v}" for u, v in sorted(m.edges))
            lines.append(f"class {idx}: {body}")
        lines.append(
            "leftover: " + " ".join(f"{u}-{v}" for u, v in sorted(self.leftover))
        )
        lines.append(
            "uncovered: "
            + " ".join(f"{v}:{self.uncovered_count[v]}" for v in sorted(self.uncovered_count))
        )
        return "\n".join(lines) + "\n"


def run_nibble(
    g: Graph,
    params: NibbleParams,
    seed: int,
    stage_audit=None,
) -> NibbleOutcome:
    """Run the staged coloring for t_tau stages (or params.stage_cap).

    ``stage_audit(state, params)`` runs after every stage when provided;
    it is the hook the test suite uses for exact structural checks.
    """
    delta = params.delta if params.delta is not None else g.min_degree()
    rng = random.Random(seed)
    state = NibbleState(g, delta)
    stages = params.stage_cap if params.stage_cap is not None else t_tau(params.tau)
    trajectory = predict_trajectory(max(g.max_degree(), 1), max(g.n, 2), params)
    log: list[StageLogRow] = []
    for i in range(stages):
        colored = nibble_stage(state, params, rng)
        vp = [len(state.vertex_palette[v]) for v in range(g.n)]
        ep = [len(p) for p in state.edge_palette.values()]
        log.append(
            StageLogRow(
                stage=i,
                edges_colored=colored,
                min_vertex_palette=min(vp) if vp else 0,
                max_vertex_palette=max(vp) if vp else 0,
                min_edge_palette=min(ep) if ep else 0,
                max_edge_palette=max(ep) if ep else 0,
                predicted_d=trajectory[min(i + 1, len(trajectory) - 1)][0],
                predicted_a=trajectory[min(i + 1, len(trajectory) - 1)][1],
            )
        )
        if stage_audit is not None:
            stage_audit(state, params)

    matchings = tuple(
        Matching(frozenset(state.classes[c])) for c in range(delta)
    )
    leftover = frozenset(state.remaining_edges())
    cover: dict[int, int] = {v: 0 for v in range(g.n)}
    for m in matchings:
        for u, v in m.edges:
            cover[u] += 1
            cover[v] += 1
    uncovered = {v: delta - cover[v] for v in range(g.n)}
    active = frozenset(v for v in range(g.n) if g.degree(v) > 0)
    return NibbleOutcome(
        n=g.n,
        delta=delta,
        tau=params.tau,
        matchings=matchings,
        leftover=leftover,
        uncovered_count=uncovered,
        stage_log=tuple(log),
        active_vertices=active,
    )


@dataclass(frozen=True)
class EquitabilityReport:
    ok: bool
    min_covered: int
    worst_matching: int
    cover_threshold: float
    max_uncovered: int
    worst_vertex: int
    uncover_threshold: float


def check_equitability(
    outcome: NibbleOutcome, tau: float, delta_max: int, slack: float
) -> EquitabilityReport:
    """Pass iff every class covers >= (1 - slack*tau) * n_active vertices and
    every active vertex misses <= slack*tau*delta_max/2 classes.

    Isolated input vertices are excluded: they can never be covered.
    """
    active = outcome.active_vertices
    n_eff = len(active)
    cover_threshold = (1 - slack * tau) * n_eff
    uncover_threshold = slack * tau * delta_max / 2
    min_covered, worst_matching = n_eff, -1
    for idx, m in enumerate(outcome.matchings):
        covered = 2 * m.size()
        if covered < min_covered:
            min_covered, worst_matching = covered, idx
    max_uncovered, worst_vertex = -1, -1
    for v in active:
        if outcome.uncovered_count[v] > max_uncovered:
            max_uncovered, worst_vertex = outcome.uncovered_count[v], v
    ok = min_covered >= cover_threshold and max_uncovered <= uncover_threshold
    return EquitabilityReport(
        ok,
        min_covered,
        worst_matching,
        cover_threshold,
        max_uncovered,
        worst_vertex,
        uncover_threshold,
    )


def predict_trajectory(
    delta_max: int, n: int, params: NibbleParams
) -> list[tuple[float, float, float]]:
    """Predicted (d_i, a_i, e_i) per stage: d_i = (1-p_tau)^i * Delta,
    a_i = d_i^2 / Delta, and e_{i+1} = C*(e_i + c*sqrt(log n / a_i)) with
    C = 1 + K*tau and e_0 = (Delta - delta)/Delta."""
    if delta_max < 1:
        raise DomainError("max degree must be >= 1")
    if n < 2:
        raise DomainError("n must be >= 2")
    p = p_tau(params.tau)
    stages = params.stage_cap if params.stage_cap is not None else t_tau(params.tau)
    delta = params.delta if params.delta is not None else delta_max
    big_c = 1 + params.big_k * params.tau
    logn = math.log(n)
    out: list[tuple[float, float, float]] = []
    e = (delta_max - delta) / delta_max
    for i in range(stages + 1):
        d_i = (1 - p) ** i * delta_max
        a_i = d_i * d_i / delta_max
        out.append((d_i, a_i, e))
        e = big_c * (e + params.little_c * math.sqrt(logn / a_i))
    return out


@dataclass(frozen=True)
class InvariantReport:
    ok: bool
    structural_ok: bool
    concentration_ok: bool
    violations: tuple[str, ...]


def check_state_invariants(
    state: NibbleState,
    predicted: list[tuple[float, float, float]] | None = None,
    slack: float = 1.0,
    tau: float | None = None,
) -> InvariantReport:
    """Exact structural checks (palette intersection law, counter
    recomputation) plus optional concentration checks against the predicted
    trajectory within (1 +- slack*tau^3)."""
    violations: list[str] = []
    for u in range(state.n):
        for v in state.remaining[u]:
            if u < v:
                expect = state.vertex_palette[u] & state.vertex_palette[v]
                if state.edge_palette[(u, v)] != expect:
                    violations.append(f"palette law broken at edge ({u},{v})")
    fresh = state.recompute_color_deg()
    for u in range(state.n):
        for c in state.colors:
            if fresh[u][c] != state.color_deg[u][c]:
                violations.append(
                    f"counter mismatch at (vertex {u}, color {c}): "
                    f"{state.color_deg[u][c]} vs {fresh[u][c]}"
                )
    structural_ok = not violations

    concentration_ok = True
    if predicted is not None and tau is not None:
        i = min(state.stage, len(predicted) - 1)
        d_i, a_i, _ = predicted[i]
        width = slack * tau ** 3
        lo_d, hi_d = (1 - width) * d_i, (1 + width) * d_i
        lo_a, hi_a = (1 - width) * a_i, (1 + width) * a_i
        for u in range(state.n):
            if state.remaining[u] or state.vertex_palette[u]:
                size = len(state.vertex_palette[u])
                if not lo_d <= size <= hi_d:
                    concentration_ok = False
                    violations.append(f"vertex palette {size} outside window at {u}")
                    break
        for e, pal in state.edge_palette.items():
            if not lo_a <= len(pal) <= hi_a:
                concentration_ok = False
                violations.append(f"edge palette {len(pal)} outside window at {e}")
                break
    return InvariantReport(
        structural_ok and concentration_ok, structural_ok, concentration_ok,
        tuple(violations),
    )


def stage_log_csv(outcome: NibbleOutcome) -> str:
    header = (
        "stage,edges_colored,min_vertex_palette,max_vertex_palette,"
        "min_edge_palette,max_edge_palette,predicted_d_i,predicted_a_i"
    )
    rows = [header]
    for row in outcome.stage_log:
        rows.append(
            f"{row.stage},{row.edges_colored},{row.min_vertex_palette},"
            f"{row.max_vertex_palette},{row.min_edge_palette},"
            f"{row.max_edge_palette},{row.predicted_d!r},{row.predicted_a!r}"
        )
    return "\n".join(rows) + "\n"
