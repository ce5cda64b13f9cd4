import itertools
import math
import random

import pytest

from onefactor import (
    complete_bipartite,
    complete_graph,
    from_edge_list,
    verify_factorization,
)
from onefactor.errors import NotRegularError, OddOrderError, TooLargeError
from onefactor.oracle import (
    bound_comparison,
    count_one_factorizations,
    count_perfect_matchings,
    count_report,
    enumerate_one_factorizations,
    enumerate_perfect_matchings,
    ryser_permanent,
)


def _double_factorial(k):
    out = 1
    for i in range(1, 2 * k, 2):
        out *= i
    return out


def test_enumerate_pm_counts_match_double_factorial():
    for k in range(1, 6):
        pms = enumerate_perfect_matchings(complete_graph(2 * k))
        assert len(pms) == _double_factorial(k)
        assert len({frozenset(m.edges) for m in pms}) == len(pms)


def test_enumerate_pm_c6():
    g = from_edge_list(6, [(i, (i + 1) % 6) for i in range(5)] + [(0, 5)])
    assert len(enumerate_perfect_matchings(g)) == 2


def test_enumerate_pm_guards():
    with pytest.raises(OddOrderError):
        enumerate_perfect_matchings(complete_graph(5))
    with pytest.raises(TooLargeError):
        enumerate_perfect_matchings(complete_graph(18))


def test_ryser_all_ones_is_factorial():
    for k in range(1, 9):
        assert ryser_permanent([[1] * k for _ in range(k)]) == math.factorial(k)


def test_ryser_identity():
    eye = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    assert ryser_permanent(eye) == 1


def test_ryser_brute_force_cross_check():
    rng = random.Random(4)
    for _ in range(30):
        k = rng.randrange(1, 6)
        mat = [[rng.randrange(2) for _ in range(k)] for _ in range(k)]
        brute = sum(
            all(mat[i][sigma[i]] for i in range(k))
            for sigma in itertools.permutations(range(k))
        )
        assert ryser_permanent(mat) == brute


def test_ryser_matches_enumeration_on_bipartite():
    rng = random.Random(17)
    for _ in range(25):
        k = rng.randrange(1, 9)
        mat = [[int(rng.random() < 0.5) for _ in range(k)] for _ in range(k)]
        edges = [
            (i, k + j) for i in range(k) for j in range(k) if mat[i][j]
        ]
        g = from_edge_list(2 * k, edges)
        assert ryser_permanent(mat) == len(enumerate_perfect_matchings(g))


def test_factorization_counts_k4_k6():
    assert count_one_factorizations(complete_graph(4)) == 1
    assert count_one_factorizations(complete_graph(6)) == 6
    # independent second strategy: ordered / d!
    assert count_one_factorizations(complete_graph(4), "ordered") == math.factorial(3)
    assert count_one_factorizations(complete_graph(6), "ordered") == 6 * math.factorial(5)


def _latin_squares(k):
    # row-by-row enumeration with column constraints
    rows = list(itertools.permutations(range(k)))

    def rec(chosen):
        if len(chosen) == k:
            return 1
        total = 0
        for row in rows:
            if all(
                row[c] != prev[c] for prev in chosen for c in range(k)
            ):
                total += rec(chosen + [row])
        return total

    return rec([])


def test_k33_count_equals_latin_squares():
    unordered = count_one_factorizations(complete_bipartite(3, 3))
    assert unordered * math.factorial(3) == _latin_squares(3) == 12


def test_ordered_unordered_relation():
    rng = random.Random(23)
    from onefactor.matching import bipartite_r_factor
    from onefactor import canonical_split

    hosts = [complete_graph(4), complete_graph(6), complete_bipartite(3, 3)]
    sub = bipartite_r_factor(complete_bipartite(4, 4), canonical_split(4, 4), 2)
    hosts.append(sub)
    for g in hosts:
        d = g.regular_degree()
        unordered = count_one_factorizations(g, "unordered")
        ordered = count_one_factorizations(g, "ordered")
        assert ordered == unordered * math.factorial(d)


def test_counting_invariant_under_relabeling():
    rng = random.Random(5)
    perm = list(range(6))
    rng.shuffle(perm)
    g = from_edge_list(
        6, [(min(perm[u], perm[v]), max(perm[u], perm[v]))
            for u, v in complete_graph(6).edges]
    )
    assert count_one_factorizations(g) == 6


def test_enumerated_witnesses_verify():
    for g in (complete_graph(4), complete_graph(6)):
        for fact in enumerate_one_factorizations(g):
            assert verify_factorization(g, fact, require_perfect=True).ok


def test_count_report_consistency():
    rep = count_report(complete_graph(6))
    assert rep.perfect_matchings == 15
    assert rep.factorizations_unordered == 6
    assert rep.factorizations_ordered == 720


def test_counting_guards():
    with pytest.raises(NotRegularError):
        count_one_factorizations(from_edge_list(4, [(0, 1), (1, 2)]))


def test_bound_comparison_small_completes():
    for n in (4, 6):
        rep = bound_comparison(complete_graph(n))
        assert rep.passes
        assert rep.exact_unordered >= rep.bound
