"""Exact exponential-time ground truth for cross-validation.

Enumeration and counting of perfect matchings, Ryser's inclusion-exclusion
permanent, and 1-factorization counting with canonical-order pruning.
Everything here is exact integer arithmetic; caps keep runtimes at
CI scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NotRegularError, OddOrderError, TooLargeError
from .graph import Edge, Factorization, Graph, Matching
from .pipeline import lower_bound_log

ENUMERATION_CAP = 16
COUNTING_CAP = 24
FACTORIZATION_CAP = 12


def _check_order(g: Graph, cap: int) -> None:
    if g.n % 2 != 0:
        raise OddOrderError(f"{g.n} vertices")
    if g.n > cap:
        raise TooLargeError(f"{g.n} vertices exceeds cap {cap}")


def _adjacency_masks(g: Graph) -> list[int]:
    masks = [0] * g.n
    for u, v in g.edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    return masks


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def enumerate_perfect_matchings(g: Graph, cap: int = ENUMERATION_CAP) -> list[Matching]:
    """All perfect matchings, duplicate-free, by matching the lowest
    uncovered vertex to each of its uncovered neighbors."""
    _check_order(g, cap)
    if g.n == 0:
        return [Matching(frozenset())]
    masks = _adjacency_masks(g)
    full = (1 << g.n) - 1
    out: list[Matching] = []
    chosen: list[Edge] = []

    def rec(covered: int) -> None:
        if covered == full:
            out.append(Matching(frozenset(chosen)))
            return
        v = ((covered + 1) & ~covered).bit_length() - 1  # lowest uncovered vertex
        free = masks[v] & ~covered
        for w in _iter_bits(free):
            chosen.append((v, w) if v < w else (w, v))
            rec(covered | (1 << v) | (1 << w))
            chosen.pop()

    rec(0)
    return out


def count_perfect_matchings(g: Graph, cap: int = COUNTING_CAP) -> int:
    _check_order(g, cap)
    if g.n == 0:
        return 1
    masks = _adjacency_masks(g)
    full = (1 << g.n) - 1

    def rec(covered: int) -> int:
        if covered == full:
            return 1
        v = (covered + 1 & ~covered).bit_length() - 1
        free = masks[v] & ~covered
        total = 0
        for w in _iter_bits(free):
            total += rec(covered | (1 << v) | (1 << w))
        return total

    return rec(0)


def ryser_permanent(matrix: Sequence[Sequence[int]], cap: int = 28) -> int:
    """Exact permanent by Ryser's inclusion-exclusion with Gray-code updates.

    Per(A) = (-1)^m * sum over column subsets S of (-1)^{|S|} * prod_i (row
    sums restricted to S). Arbitrary-precision integers throughout.
    """
    m = len(matrix)
    for row in matrix:
        if len(row) != m:
            raise ValueError("matrix must be square")
    if m > cap:
        raise TooLargeError(f"{m}x{m} exceeds cap {cap}")
    if m == 0:
        return 1
    cols = [[matrix[i][j] for i in range(m)] for j in range(m)]
    row_sums = [0] * m
    total = 0
    prev_gray = 0
    for k in range(1, 1 << m):
        gray = k ^ (k >> 1)
        changed = gray ^ prev_gray
        j = changed.bit_length() - 1
        col = cols[j]
        if gray & changed:
            for i in range(m):
                row_sums[i] += col[i]
        else:
            for i in range(m):
                row_sums[i] -= col[i]
        prev_gray = gray
        prod = 1
        for i in range(m):
            prod *= row_sums[i]
            if prod == 0:
                break
        size = gray.bit_count()
        total += prod if (m - size) % 2 == 0 else -prod
    return total


def _pm_edge_lists(masks: list[int], n: int, anchor: Edge | None):
    """Yield perfect matchings (as edge lists) of the graph given by masks;
    when anchor is set, only matchings containing that edge."""
    full = (1 << n) - 1
    start_cover = 0
    prefix: list[Edge] = []
    if anchor is not None:
        u, w = anchor
        start_cover = (1 << u) | (1 << w)
        prefix = [anchor]

    acc: list[Edge] = list(prefix)

    def rec(covered: int):
        if covered == full:
            yield list(acc)
            return
        v = (covered + 1 & ~covered).bit_length() - 1
        free = masks[v] & ~covered
        for w in _iter_bits(free):
            acc.append((v, w) if v < w else (w, v))
            yield from rec(covered | (1 << v) | (1 << w))
            acc.pop()

    yield from rec(start_cover)


def count_one_factorizations(g: Graph, mode: str = "unordered",
                             cap: int = FACTORIZATION_CAP) -> int:
    """Exact number of partitions of E(g) into perfect matchings.

    Unordered mode counts each set of matchings once by forcing every
    chosen matching to contain the lowest remaining edge at vertex 0 (the
    anchor); ordered mode counts sequences and equals unordered * d!.
    """
    if mode not in ("unordered", "ordered"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_order(g, cap)
    d = g.regular_degree()
    if d is None:
        raise NotRegularError("1-factorizations require a regular graph")
    if g.n == 0 or d == 0:
        return 1 if g.num_edges() == 0 else 0
    masks = _adjacency_masks(g)

    memo: dict[tuple[int, ...], int] = {}

    def count_unordered(ms: tuple[int, ...]) -> int:
        if not any(ms):
            return 1
        cached = memo.get(ms)
        if cached is not None:
            return cached
        if ms[0] == 0:
            # vertex 0 exhausted but edges remain: no completion
            memo[ms] = 0
            return 0
        w = (ms[0] & -ms[0]).bit_length() - 1
        anchor = (0, w)
        total = 0
        for pm in _pm_edge_lists(list(ms), g.n, anchor):
            nxt = list(ms)
            ok = True
            for a, b in pm:
                if not (nxt[a] >> b) & 1:
                    ok = False
                    break
                nxt[a] &= ~(1 << b)
                nxt[b] &= ~(1 << a)
            if ok:
                total += count_unordered(tuple(nxt))
        memo[ms] = total
        return total

    def count_ordered(ms: tuple[int, ...]) -> int:
        if not any(ms):
            return 1
        total = 0
        for pm in _pm_edge_lists(list(ms), g.n, None):
            nxt = list(ms)
            for a, b in pm:
                nxt[a] &= ~(1 << b)
                nxt[b] &= ~(1 << a)
            total += count_ordered(tuple(nxt))
        return total

    if mode == "unordered":
        return count_unordered(tuple(masks))
    return count_ordered(tuple(masks))


def enumerate_one_factorizations(g: Graph, cap: int = 10) -> list[Factorization]:
    """All unordered 1-factorizations as witness objects (small graphs only)."""
    _check_order(g, cap)
    d = g.regular_degree()
    if d is None:
        raise NotRegularError("1-factorizations require a regular graph")
    masks = _adjacency_masks(g)
    out: list[Factorization] = []
    stack: list[Matching] = []

    def rec(ms: list[int]) -> None:
        if not any(ms):
            out.append(Factorization(tuple(stack), g))
            return
        if ms[0] == 0:
            return
        w = (ms[0] & -ms[0]).bit_length() - 1
        for pm in _pm_edge_lists(ms, g.n, (0, w)):
            nxt = list(ms)
            for a, b in pm:
                nxt[a] &= ~(1 << b)
                nxt[b] &= ~(1 << a)
            stack.append(Matching(frozenset(pm)))
            rec(nxt)
            stack.pop()

    rec(list(masks))
    return out


@dataclass(frozen=True)
class CountReport:
    perfect_matchings: int
    factorizations_unordered: int
    factorizations_ordered: int


def count_report(g: Graph, cap: int = FACTORIZATION_CAP) -> CountReport:
    unordered = count_one_factorizations(g, "unordered", cap)
    d = g.regular_degree()
    ordered = unordered * math.factorial(d if d is not None else 0)
    return CountReport(count_perfect_matchings(g), unordered, ordered)


@dataclass(frozen=True)
class BoundReport:
    exact_unordered: int
    log_bound: float
    bound: float
    simplified_bound: float
    passes: bool


def bound_comparison(g: Graph, C: float | None = None,
                     cap: int = FACTORIZATION_CAP) -> BoundReport:
    """Exact unordered count against the counting lower bound (and its
    C -> infinity simplification (d/e^2)^(dn/2))."""
    d = g.regular_degree()
    if d is None:
        raise NotRegularError("bound comparison requires a regular graph")
    exact = count_one_factorizations(g, "unordered", cap)
    log_bound = lower_bound_log(g.n, d, C)
    simplified = math.exp(lower_bound_log(g.n, d, None))
    bound = math.exp(log_bound)
    return BoundReport(exact, log_bound, bound, simplified, exact >= bound)
