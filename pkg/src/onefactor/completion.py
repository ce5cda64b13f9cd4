"""Peel perfect matchings off a regular graph around a robust bipartite core.

Given an r1-regular balanced bipartite certificate graph H inside an
(r1+r2)-regular graph R on the same vertices, each peel takes equal-size
matchings from the two intra-side graphs, deletes their endpoints from the
live H view, closes the rest of the vertices with a perfect matching of
that view, and removes the union (a perfect matching of R). The intra-side
edge counts stay equal on both sides throughout; once they hit zero the
remainder is regular bipartite and splits into perfect matchings directly.

Matching sizes follow the analysis targets when those are usable
(prune_matchings); on small instances where the nominal target rounds to
zero or decays too slowly, the peels fall back to the full
largest-color-class matchings with a halving backoff on contract
violations. Every deviation is reported through ``notes``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .errors import (
    InvariantBrokenError,
    NotRegularError,
    PreconditionViolatedError,
    RequestTooLargeError,
    ResampleGoodGraphError,
    RetryBudgetExhaustedError,
)
from .graph import (
    Edge,
    Factorization,
    Graph,
    Matching,
    _graph_from_canonical,
    canonical_edge,
)
from .goodgraph import ContractViolation, GoodGraphCertificate, contract_matching
from .matching import bipartite_regular_factorize, misra_gries_color
from .util import derive_seed


class _PeelFailed(Exception):
    """Internal: the current attempt ran out of matching choices."""


@dataclass
class CompletionState:
    cert: GoodGraphCertificate
    original: Graph
    r_current: Graph
    h_current: Graph
    f: int
    peeled: list[Matching] = field(default_factory=list)
    phase: str = "main"

    @property
    def r2(self) -> int:
        return (self.original.regular_degree() or 0) - self.cert.r1


def intra_edges(g: Graph, side: frozenset[int]) -> list[Edge]:
    return sorted(e for e in g.edges if e[0] in side and e[1] in side)


def make_state(cert: GoodGraphCertificate, R: Graph) -> CompletionState:
    """Validate the (H, R) pair and set up the peeling state."""
    r = R.regular_degree()
    if r is None:
        raise NotRegularError(
            f"completion input degrees range {R.min_degree()}..{R.max_degree()}"
        )
    if cert.host.n != R.n:
        raise PreconditionViolatedError("certificate and host sizes differ")
    missing = cert.host.edges - R.edges
    if missing:
        raise PreconditionViolatedError(
            f"certificate edge {next(iter(missing))} not inside the host"
        )
    fa = len(intra_edges(R, cert.bip.side_a))
    fb = len(intra_edges(R, cert.bip.side_b))
    if fa != fb:
        raise InvariantBrokenError(f"intra-side edge counts differ: {fa} vs {fb}")
    h_view = _graph_from_canonical(R.n, cert.host.edges)
    return CompletionState(cert, R, R, h_view, fa)


def _recount_and_check(state: CompletionState) -> int:
    fa = len(intra_edges(state.r_current, state.cert.bip.side_a))
    fb = len(intra_edges(state.r_current, state.cert.bip.side_b))
    if fa != fb:
        raise InvariantBrokenError(
            f"intra-side edge counts diverged: {fa} vs {fb}"
        )
    return fa


def inner_matchings(R_i: Graph, bip, r2: int) -> tuple[Matching, Matching]:
    """Matchings of size exactly ceil(f/(r2+1)) in each intra-side graph,
    taken from the largest color class of a proper edge coloring."""
    side_a, side_b = bip.side_a, bip.side_b
    ea = intra_edges(R_i, side_a)
    eb = intra_edges(R_i, side_b)
    if len(ea) != len(eb):
        raise InvariantBrokenError(
            f"intra-side edge counts differ: {len(ea)} vs {len(eb)}"
        )
    f = len(ea)
    if f == 0:
        return Matching(frozenset()), Matching(frozenset())
    size = math.ceil(f / (r2 + 1))
    out = []
    for edges in (ea, eb):
        sub = _graph_from_canonical(R_i.n, edges)
        if sub.max_degree() > r2:
            raise RequestTooLargeError(
                f"intra-side max degree {sub.max_degree()} exceeds r2 = {r2}"
            )
        best: list[Edge] = []
        by_color: dict[int, list[Edge]] = {}
        for e, c in misra_gries_color(sub).color_of.items():
            by_color.setdefault(c, []).append(e)
        for c in sorted(by_color):
            if len(by_color[c]) > len(best):
                best = by_color[c]
        if len(best) < size:
            raise RequestTooLargeError(
                f"largest class {len(best)} below required size {size}"
            )
        out.append(Matching(frozenset(sorted(best)[:size])))
    return out[0], out[1]


def prune_matchings(
    m_a: Matching,
    m_b: Matching,
    H: Graph,
    alpha: float,
    r1: int,
    r2: int,
    f: int,
    seed: int,
    retry_budget: int = 100,
) -> tuple[Matching, Matching]:
    """Shrink both matchings to exactly floor(alpha*f/(2*r2)) edges while no
    vertex keeps more than 3*alpha*r1/2 H-neighbors among the matched
    endpoints.

    Sides no bigger than 3*alpha*r1/4 are kept whole before truncation; the
    others are subsampled edgewise with probability 3*alpha/4 until the size
    and load conditions hold.
    """
    if r2 <= 0:
        raise PreconditionViolatedError("pruning needs r2 >= 1")
    target = math.floor(alpha * f / (2 * r2))
    if target <= 0:
        return Matching(frozenset()), Matching(frozenset())
    keep_threshold = 3 * alpha * r1 / 4
    load_cap = 3 * alpha * r1 / 2
    rng = random.Random(seed)

    def load_ok(edges_a, edges_b) -> bool:
        matched = {x for e in edges_a for x in e} | {x for e in edges_b for x in e}
        for v in range(H.n):
            if len(H.neighbors(v) & matched) > load_cap:
                return False
        return True

    fixed_a = len(m_a.edges) <= keep_threshold
    fixed_b = len(m_b.edges) <= keep_threshold
    for _ in range(retry_budget):
        sub_a = (
            set(m_a.edges)
            if fixed_a
            else {e for e in sorted(m_a.edges) if rng.random() < 3 * alpha / 4}
        )
        sub_b = (
            set(m_b.edges)
            if fixed_b
            else {e for e in sorted(m_b.edges) if rng.random() < 3 * alpha / 4}
        )
        if len(sub_a) < target or len(sub_b) < target:
            if fixed_a and fixed_b:
                break
            continue
        if not load_ok(sub_a, sub_b):
            if fixed_a and fixed_b:
                break
            continue
        trim_a = Matching(frozenset(sorted(sub_a)[:target]))
        trim_b = Matching(frozenset(sorted(sub_b)[:target]))
        return trim_a, trim_b
    raise RetryBudgetExhaustedError(
        f"pruning failed to reach size {target} within budget"
    )


def _endpoints(edges) -> set[int]:
    return {x for e in edges for x in e}


def _apply_peel(
    state: CompletionState,
    m_a_edges: frozenset[Edge],
    m_b_edges: frozenset[Edge],
    cross: Matching,
) -> CompletionState:
    peel = Matching(m_a_edges | m_b_edges | cross.edges)
    if peel.vertices() != frozenset(range(state.original.n)):
        raise InvariantBrokenError("peel is not a perfect matching")
    for e in peel.edges:
        if e not in state.r_current.edges:
            raise InvariantBrokenError(f"peel edge {e} left the live graph")
    new_r = _graph_from_canonical(
        state.original.n, state.r_current.edges - peel.edges
    )
    new_h = _graph_from_canonical(
        state.original.n, state.h_current.edges - cross.edges
    )
    nxt = CompletionState(
        state.cert, state.original, new_r, new_h,
        state.f - len(m_a_edges), list(state.peeled) + [peel], state.phase,
    )
    if _recount_and_check(nxt) != nxt.f:
        raise InvariantBrokenError("intra edge bookkeeping diverged from recount")
    return nxt


def _contract_on_view(state: CompletionState, removed: set[int]):
    return contract_matching(state.cert, removed, host=state.h_current)


def peel_once(state: CompletionState, cert: GoodGraphCertificate, seed: int) -> CompletionState:
    """One analysis-faithful peel: sized inner matchings, pruning, vertex
    deletion from the live view, and a closing perfect matching."""
    r2 = state.r2
    m_a, m_b = inner_matchings(state.r_current, cert.bip, r2)
    p_a, p_b = prune_matchings(
        m_a, m_b, state.h_current, cert.alpha, cert.r1, r2, state.f, seed
    )
    removed = _endpoints(p_a.edges) | _endpoints(p_b.edges)
    result = _contract_on_view(state, removed)
    if isinstance(result, ContractViolation):
        raise _PeelFailed(f"contract violation with {len(removed)} removals")
    return _apply_peel(state, p_a.edges, p_b.edges, result)


def _single_edge_candidates(state: CompletionState, rng: random.Random | None,
                            lookahead: int = 48):
    """Pairs (A-edge, B-edge) to try for a size-1 peel, lowest-index first
    (rotated by the rng when retrying)."""
    ea = intra_edges(state.r_current, state.cert.bip.side_a)
    eb = intra_edges(state.r_current, state.cert.bip.side_b)
    if rng is not None:
        rng.shuffle(ea)
        rng.shuffle(eb)
    count = 0
    for a_edge in ea:
        for b_edge in eb:
            if count >= lookahead:
                return
            count += 1
            yield a_edge, b_edge


def finish_single_edges(
    state: CompletionState, cert: GoodGraphCertificate, rng: random.Random | None = None
) -> CompletionState:
    """Peel one intra edge per side per round until no intra edges remain.

    Nominally entered once f <= r2; also reachable earlier when the sized
    targets round to zero on tiny instances.
    """
    cur = replace(state, phase="single-edge", peeled=list(state.peeled))
    while cur.f > 0:
        progressed = False
        for a_edge, b_edge in _single_edge_candidates(cur, rng):
            removed = set(a_edge) | set(b_edge)
            result = _contract_on_view(cur, removed)
            if isinstance(result, ContractViolation):
                continue
            cur = _apply_peel(
                cur, frozenset([a_edge]), frozenset([b_edge]), result
            )
            cur.phase = "single-edge"
            progressed = True
            break
        if not progressed:
            raise _PeelFailed("no single-edge pair admits a closing matching")
    return cur


def finish_bipartite(state: CompletionState) -> Factorization:
    """Split the intra-free remainder into perfect matchings and return the
    full factorization of the original host."""
    if state.f != 0:
        raise PreconditionViolatedError("intra edges remain")
    remainder = state.r_current
    deg = remainder.regular_degree()
    if deg is None:
        raise NotRegularError("bipartite remainder is not regular")
    matchings = list(state.peeled)
    if deg > 0:
        tail = bipartite_regular_factorize(remainder, state.cert.bip)
        matchings.extend(tail.matchings)
    return Factorization(tuple(matchings), state.original)


def _greedy_matching(edges: list[Edge], rng: random.Random | None = None) -> list[Edge]:
    """Maximal matching that clears high-degree vertices first.

    Without the priority the leftover intra edges pile up on a few vertices
    whose matchings then shrink below the peel schedule. Ties (and retry
    rounds) are randomized through ``rng``.
    """
    degree: dict[int, int] = {}
    for u, v in edges:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    pool = list(edges)
    if rng is not None:
        rng.shuffle(pool)
    pool.sort(key=lambda e: -(degree[e[0]] + degree[e[1]]))
    used: set[int] = set()
    out: list[Edge] = []
    for u, v in pool:
        if u not in used and v not in used:
            out.append((u, v))
            used.add(u)
            used.add(v)
    return out


def _min_intra_degree(R: Graph, bip) -> int:
    a = bip.side_a
    low = None
    for v in range(R.n):
        same = a if v in a else bip.side_b
        deg = sum(1 for u in R.neighbors(v) if u in same)
        low = deg if low is None else min(low, deg)
    return low or 0


def _attempt(
    cert: GoodGraphCertificate,
    R: Graph,
    seed: int,
    slack: float,
    notes: list[str] | None,
) -> Factorization:
    state = make_state(cert, R)
    r2 = state.r2
    rng = random.Random(seed)
    # Every vertex is closure-matched (through the certificate graph) in each
    # peel that does not match it on an intra edge; since all intra edges are
    # gone by the end, vertex v is closure-matched exactly
    # (#peels - intra_degree(v)) times, which its r1 certificate edges must
    # cover. Total peels therefore cannot exceed r1 + min intra degree, and
    # widths follow that schedule.
    hard_budget = cert.r1 + _min_intra_degree(R, cert.bip)
    # Aim to clear the intra edges a few peels before the hard bound: at the
    # bound itself the minimum-degree vertices have no certificate edges to
    # spare and closings become needle-threading.
    peel_budget = max(1, hard_budget - max(1, hard_budget // 12))
    peels_done = 0
    desk_noted = False
    while state.f > 0:
        target = math.floor(cert.alpha * state.f / (2 * r2)) if r2 > 0 else 0
        paper_path = target >= 1 and slack <= 1.0 and state.f > r2
        peeled_ok = False
        if paper_path:
            m_a, m_b = inner_matchings(state.r_current, cert.bip, r2)
            p_a, p_b = prune_matchings(
                m_a, m_b, state.h_current, cert.alpha, cert.r1, r2, state.f,
                derive_seed(seed, "prune", peels_done),
            )
            removed = _endpoints(p_a.edges) | _endpoints(p_b.edges)
            result = _contract_on_view(state, removed)
            if isinstance(result, ContractViolation):
                raise _PeelFailed(
                    f"closing matching failed with {len(removed)} removals"
                )
            state = _apply_peel(state, p_a.edges, p_b.edges, result)
            peeled_ok = True
        else:
            if notes is not None and not desk_noted:
                notes.append(
                    "completion used schedule-width greedy inner matchings "
                    f"(nominal target {target})"
                )
                desk_noted = True
            peels_left = max(1, peel_budget - peels_done)
            needed = math.ceil(state.f / peels_left)
            for attempt_round in range(12):
                shuffler = rng if (peels_done > 0 or attempt_round > 0) else None
                pool_a = _greedy_matching(
                    intra_edges(state.r_current, cert.bip.side_a), shuffler
                )
                pool_b = _greedy_matching(
                    intra_edges(state.r_current, cert.bip.side_b), shuffler
                )
                w_full = min(len(pool_a), len(pool_b))
                # aim a little above schedule; after repeated closing
                # failures trade width for feasibility and catch up later
                w = min(w_full, needed + 2) if w_full >= needed else w_full
                if attempt_round >= 6:
                    w = max(1, min(w, needed - (attempt_round - 5)))
                if w < 1:
                    break
                pick_a = frozenset(
                    pool_a if w == len(pool_a) else rng.sample(pool_a, w)
                )
                pick_b = frozenset(
                    pool_b if w == len(pool_b) else rng.sample(pool_b, w)
                )
                removed = _endpoints(pick_a) | _endpoints(pick_b)
                result = _contract_on_view(state, removed)
                if isinstance(result, ContractViolation):
                    continue
                state = _apply_peel(state, pick_a, pick_b, result)
                peeled_ok = True
                break
            if not peeled_ok:
                raise _PeelFailed(
                    f"no peel of width ~{needed} admitted a closing matching "
                    f"(f={state.f}, peels done {peels_done})"
                )
        peels_done += 1
        if peels_done > 4 * (R.regular_degree() or 1) + 8:
            raise _PeelFailed("peel count exceeded budget without clearing intra edges")
    return finish_bipartite(state)


def complete(
    cert: GoodGraphCertificate,
    R: Graph,
    seed: int = 0,
    retry_budget: int = 100,
    slack: float = 1.0,
    notes: list[str] | None = None,
) -> Factorization:
    """Full 1-factorization of R, retrying whole attempts under derived
    seeds when a closing matching fails; exhausting the budget raises
    ResampleGoodGraphError (the certificate is presumed to have gone bad).

    ``slack`` > 1 unlocks the small-instance peel sizing; the analysis
    window for r2 is reported via ``notes`` but never enforced.
    """
    r = R.regular_degree()
    if r is None:
        raise NotRegularError("completion requires a regular host")
    r2 = r - cert.r1
    if r2 < 0:
        raise PreconditionViolatedError(
            f"host degree {r} below certificate degree {cert.r1}"
        )
    if notes is not None:
        window = cert.alpha ** 4 * cert.r1 / max(math.log(max(cert.m, 2)), 1e-9)
        if r2 > window:
            notes.append(
                f"r2 = {r2} outside analysis window {window:.4g} (reported only)"
            )
    failures = 0
    for attempt in range(retry_budget):
        try:
            fact = _attempt(cert, R, derive_seed(seed, "complete", attempt), slack, notes)
        except _PeelFailed as exc:
            failures += 1
            if notes is not None:
                notes.append(f"completion attempt {attempt} failed: {exc}")
            continue
        if notes is not None and attempt > 0:
            notes.append(f"completion needed {attempt + 1} attempts")
        return fact
    raise ResampleGoodGraphError(
        f"completion failed {retry_budget} attempts ({failures} peel failures); "
        "certificate presumed stale"
    )
