import pytest

from onefactor import Matching, complete_graph, from_edge_list
from onefactor.errors import FormatError
from onefactor.formats import (
    parse_edge_list,
    parse_factorization,
    write_edge_list,
    write_factorization,
)
from onefactor.graph import Factorization


def test_edge_list_round_trip_bit_exact():
    g = complete_graph(5)
    text = write_edge_list(g)
    assert text.startswith("5 10\n")
    assert text.endswith("\n")
    assert parse_edge_list(text) == g
    assert write_edge_list(parse_edge_list(text)) == text


def test_edge_list_rejects_bad_header():
    with pytest.raises(FormatError) as exc:
        parse_edge_list("nope\n")
    assert exc.value.line == 1


def test_edge_list_rejects_bad_edge_line():
    with pytest.raises(FormatError) as exc:
        parse_edge_list("4 1\na b\n")
    assert exc.value.line == 2


def test_edge_list_requires_ordered_endpoints():
    with pytest.raises(FormatError) as exc:
        parse_edge_list("4 1\n1 0\n")
    assert exc.value.line == 2


def test_edge_list_count_mismatch():
    with pytest.raises(FormatError):
        parse_edge_list("4 2\n0 1\n")


def test_factorization_round_trip():
    g = complete_graph(4)
    fact = Factorization(
        (
            Matching.from_pairs([(0, 1), (2, 3)]),
            Matching.from_pairs([(0, 2), (1, 3)]),
            Matching.from_pairs([(0, 3), (1, 2)]),
        ),
        g,
    )
    text = write_factorization(fact)
    assert text == "4 3\n0-1 2-3\n0-2 1-3\n0-3 1-2\n"
    parsed = parse_factorization(text, host=g)
    assert [m.edges for m in parsed] == [m.edges for m in fact.matchings]


def test_factorization_rejects_bad_token():
    with pytest.raises(FormatError) as exc:
        parse_factorization("4 1\n0-1 23\n")
    assert exc.value.line == 2


def test_factorization_rejects_overlapping_edges():
    with pytest.raises(FormatError):
        parse_factorization("4 1\n0-1 1-2\n")


def test_factorization_host_size_check():
    with pytest.raises(FormatError):
        parse_factorization("6 0\n", host=complete_graph(4))


def test_empty_matching_line_allowed():
    parsed = parse_factorization("4 1\n\n")
    assert parsed[0].edges == frozenset()
