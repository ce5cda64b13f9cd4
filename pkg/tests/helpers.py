"""Instance builders shared by completion, pipeline, and acceptance tests."""

from __future__ import annotations

import random

from onefactor import canonical_split, from_edge_list
from onefactor.matching import Infeasible, bipartite_r_factor


def random_regular_bipartite(m: int, r: int, rng: random.Random):
    """r-regular bipartite graph on m+m vertices: an r-factor of a random
    dense bipartite graph (resampled until the flow is feasible)."""
    bip = canonical_split(m, m)
    while True:
        p = min(0.9, max(0.5, 2 * r / m))
        edges = [
            (a, m + b) for a in range(m) for b in range(m) if rng.random() < p
        ]
        g = from_edge_list(2 * m, edges)
        sub = bipartite_r_factor(g, bip, r)
        if not isinstance(sub, Infeasible):
            return sub, bip


def random_cycle_avoiding(n: int, h, rng: random.Random) -> set[tuple[int, int]]:
    """Hamilton-cycle edge set on 0..n-1 disjoint from h's edges, built by
    random insertion (each new vertex goes into a slot whose two new edges
    avoid h)."""
    for _ in range(500):
        verts = list(range(n))
        rng.shuffle(verts)
        a, b, c = verts[0], verts[1], verts[2]
        if h.has_edge(a, b) or h.has_edge(b, c) or h.has_edge(c, a):
            continue
        cyc = [a, b, c]
        good = True
        for v in verts[3:]:
            slots = [
                i
                for i in range(len(cyc))
                if not h.has_edge(cyc[i], v)
                and not h.has_edge(v, cyc[(i + 1) % len(cyc)])
            ]
            if not slots:
                good = False
                break
            cyc.insert(rng.choice(slots) + 1, v)
        if good:
            return {
                tuple(sorted((cyc[i], cyc[(i + 1) % n]))) for i in range(n)
            }
    raise RuntimeError("could not build a disjoint cycle")


def completion_instance(seed: int, m: int = 40, r1: int = 12):
    """The standard random completion instance: r1-regular bipartite core
    plus a disjoint 2-regular graph over all vertices."""
    rng = random.Random(seed)
    h, bip = random_regular_bipartite(m, r1, rng)
    cyc = random_cycle_avoiding(2 * m, h, rng)
    r = from_edge_list(2 * m, sorted(h.edges | cyc))
    return h, bip, r
