"""Construct, verify, and exactly count 1-factorizations of dense regular graphs."""

from .graph import (
    Bipartition,
    Factorization,
    Graph,
    Matching,
    bipartition,
    canonical_split,
    complete_bipartite,
    complete_graph,
    empty_graph,
    from_edge_list,
    induced_subgraph,
    random_regular,
    remove_edges,
    remove_vertices_edges,
    union_graphs,
    verify_factorization,
)

__all__ = [
    "Bipartition",
    "Factorization",
    "Graph",
    "Matching",
    "bipartition",
    "canonical_split",
    "complete_bipartite",
    "complete_graph",
    "empty_graph",
    "from_edge_list",
    "induced_subgraph",
    "random_regular",
    "remove_edges",
    "remove_vertices_edges",
    "union_graphs",
    "verify_factorization",
]
