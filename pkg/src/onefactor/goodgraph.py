"""Extraction of a sparse regular balanced bipartite subgraph whose
robust-matching property drives the completion stage.

The construction: random balanced bipartition with a degree-window check
on the crossing graph, an (almost-)half-degree factor of the crossing
graph via integral flow, independent sparsification, then a second flow
factor inside the sparsified graph. The robust-matching property itself
(every large balanced subgraph with high minimum degree has a perfect
matching) is exponential to verify, so it is treated as a runtime
contract: every perfect-matching request goes through contract_matching,
and a Hall violator is the signal to resample the whole construction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import (
    PreconditionViolatedError,
    RetryBudgetExhaustedError,
    UnbalancedPartsError,
)
from .graph import (
    Bipartition,
    Edge,
    Graph,
    Matching,
    _graph_from_canonical,
    bipartition,
    remove_vertices_edges,
)
from .matching import HallViolator, Infeasible, bipartite_r_factor, perfect_bipartite_matching
from .util import derive_seed


@dataclass
class GoodGraphCertificate:
    """A regular balanced bipartite subgraph plus the parameters that built it.

    ``contract_failures`` counts perfect-matching contract violations seen so
    far; callers use it to decide when the certificate has gone stale.
    """

    host: Graph
    bip: Bipartition
    alpha: float
    r1: int
    m: int
    provenance: dict = field(default_factory=dict)
    contract_failures: int = 0


def crossing_graph(g: Graph, bip: Bipartition) -> Graph:
    """Subgraph of edges crossing the bipartition, on the same vertex set."""
    a = bip.side_a
    return _graph_from_canonical(
        g.n, (e for e in g.edges if (e[0] in a) != (e[1] in a))
    )


def random_balanced_bipartition(
    g: Graph, seed: int, retry_budget: int = 20, slack: float = 1.0
) -> Bipartition:
    """Uniform balanced split whose crossing graph has all degrees within
    slack * 5*sqrt(d*ln n) of d/2 (d = max degree).

    The window width follows the concentration bound for random splits; the
    slack factor tightens or widens it for small instances.
    """
    if g.n % 2 != 0:
        raise PreconditionViolatedError(f"vertex count {g.n} is odd")
    if g.n < 2:
        raise PreconditionViolatedError("need at least 2 vertices")
    d = g.max_degree()
    center = d / 2
    width = slack * 5 * math.sqrt(max(d, 1) * math.log(max(g.n, 2)))
    vertices = list(range(g.n))
    for attempt in range(retry_budget):
        rng = random.Random(derive_seed(seed, "split", attempt))
        side_a = set(rng.sample(vertices, g.n // 2))
        ok = True
        for v in range(g.n):
            cross = sum(1 for u in g.neighbors(v) if (u in side_a) != (v in side_a))
            if not center - width <= cross <= center + width:
                ok = False
                break
        if ok:
            return bipartition(side_a, set(vertices) - side_a)
    raise RetryBudgetExhaustedError(
        f"no balanced split met the degree window in {retry_budget} attempts"
    )


def extract_good(
    g: Graph,
    epsilon: float,
    p: float,
    seed: int,
    retry_budget: int = 20,
    bip_slack: float = 1.0,
) -> GoodGraphCertificate:
    """Build the certificate subgraph H.

    Pipeline per attempt: balanced split -> rho*m-factor of the crossing
    graph (rho*m = d/2 - eps*m/1000, floored, and clamped to the crossing
    minimum degree when the instance is too small for the nominal value;
    clamping is recorded) -> keep each factor edge with probability p ->
    k-factor of the sparsified graph with k = ceil((1-tau)*rho*m*p),
    tau = eps/1000, clamped likewise. Any infeasibility resamples the whole
    construction under a derived seed.
    """
    d = g.regular_degree()
    if d is None or g.n % 2 != 0:
        raise PreconditionViolatedError("need a regular graph on evenly many vertices")
    n = g.n
    if d < n / 2 + epsilon * n - 1e-9:
        raise PreconditionViolatedError(
            f"degree {d} below n/2 + eps*n = {n / 2 + epsilon * n:.2f}"
        )
    if not 0 < p <= 1:
        raise PreconditionViolatedError(f"p must be in (0,1], got {p}")
    m = n // 2
    notes: list[str] = []
    if epsilon ** 4 < 100 * math.log(n) / n:
        notes.append("epsilon^4 not >> log(n)/n at this scale")
    if p * n * epsilon ** 3 < 100 * math.log(n):
        notes.append("p not >> log(n)/(n*eps^3) at this scale")

    tau = epsilon / 1000
    rho_nominal = d / 2 - epsilon * m / 1000
    for attempt in range(retry_budget):
        attempt_notes = list(notes)
        bip = random_balanced_bipartition(
            g, derive_seed(seed, "bip", attempt), retry_budget, slack=bip_slack
        )
        cross = crossing_graph(g, bip)
        delta_cross = min(len(cross.neighbors(v)) for v in range(n))
        rho_m = math.floor(rho_nominal)
        if rho_m > delta_cross:
            rho_m = delta_cross
            attempt_notes.append(
                f"rho*m clamped to crossing min degree {delta_cross}"
            )
        if rho_m < 1:
            continue
        factor = None
        for trial_r in (rho_m, rho_m - 1, rho_m - 2):
            if trial_r < 1:
                break
            candidate = bipartite_r_factor(cross, bip, trial_r)
            if not isinstance(candidate, Infeasible):
                factor = candidate
                rho_m = trial_r
                break
        if factor is None:
            continue

        rng = random.Random(derive_seed(seed, "sparsify", attempt))
        kept = [e for e in sorted(factor.edges) if rng.random() < p]
        sparse = _graph_from_canonical(n, kept)
        k = math.ceil((1 - tau) * rho_m * p)
        delta_sparse = min(len(sparse.neighbors(v)) for v in range(n))
        if k > delta_sparse:
            attempt_notes.append(
                f"k clamped from {k} to sparsified min degree {delta_sparse}"
            )
            k = delta_sparse
        if k < 1:
            continue
        sub = bipartite_r_factor(sparse, bip, k)
        if isinstance(sub, Infeasible):
            continue
        return GoodGraphCertificate(
            host=sub,
            bip=bip,
            alpha=epsilon / 10,
            r1=k,
            m=m,
            provenance={
                "seed": seed,
                "attempt": attempt,
                "p": p,
                "rho_m": rho_m,
                "k": k,
                "notes": attempt_notes,
            },
        )
    raise RetryBudgetExhaustedError(
        f"good-subgraph extraction failed {retry_budget} attempts"
    )


def certificate_to_json(cert: GoodGraphCertificate) -> str:
    """Metadata half of the certificate serialization; the graph itself
    travels separately as an edge-list file."""
    import json

    doc = {
        "alpha": cert.alpha,
        "r1": cert.r1,
        "m": cert.m,
        "seed": cert.provenance.get("seed"),
        "p": cert.provenance.get("p"),
        "failures": cert.contract_failures,
        "side_a": sorted(cert.bip.side_a),
        "notes": list(cert.provenance.get("notes", ())),
    }
    return json.dumps(doc, sort_keys=True)


def certificate_from_json(text: str, host: Graph) -> GoodGraphCertificate:
    import json

    doc = json.loads(text)
    side_a = frozenset(doc["side_a"])
    side_b = frozenset(range(host.n)) - side_a
    return GoodGraphCertificate(
        host=host,
        bip=bipartition(side_a, side_b),
        alpha=doc["alpha"],
        r1=doc["r1"],
        m=doc["m"],
        provenance={"seed": doc["seed"], "p": doc["p"], "notes": doc["notes"]},
        contract_failures=doc["failures"],
    )


@dataclass(frozen=True)
class ExpansionReport:
    ok: bool
    max_ratio: float
    worst_size: int
    trials: int
    c: float


def spot_check_expansion(
    gp: Graph, bip: Bipartition, c: float, p: float, trials: int, seed: int
) -> ExpansionReport:
    """Randomized check that e(X,Y) < c*p*m*|X| over sampled balanced pairs
    X, Y with |X| = |Y| <= m/2, across a geometric size grid."""
    if c <= 0.5:
        raise PreconditionViolatedError("c must exceed 1/2")
    a = sorted(bip.side_a)
    b = sorted(bip.side_b)
    m = len(a)
    if m != len(b):
        raise UnbalancedPartsError("expansion check needs balanced parts")
    sizes = []
    k = 1
    while k <= m // 2:
        sizes.append(k)
        k *= 2
    if m // 2 >= 1 and (not sizes or sizes[-1] != m // 2):
        sizes.append(m // 2)
    if not sizes:
        return ExpansionReport(True, 0.0, 0, 0, c)
    rng = random.Random(seed)
    max_ratio, worst = 0.0, sizes[0]
    for t in range(trials):
        size = sizes[t % len(sizes)]
        xs = set(rng.sample(a, size))
        ys = set(rng.sample(b, size))
        count = sum(1 for u in xs for w in gp.neighbors(u) if w in ys)
        ratio = count / (p * m * size) if p * m * size > 0 else 0.0
        if ratio > max_ratio:
            max_ratio, worst = ratio, size
    return ExpansionReport(max_ratio < c, max_ratio, worst, trials, c)


@dataclass(frozen=True)
class ContractViolation:
    """Hall violator seen while asking the certificate for a matching; the
    upstream signal to resample the good subgraph."""

    violator: HallViolator
    removed: frozenset[int]
    outside_window: bool


def contract_matching(
    cert: GoodGraphCertificate,
    removed_vertices,
    min_degree_floor: float | None = None,
    host: Graph | None = None,
):
    """Perfect matching of (host or the certificate graph) minus the removed
    vertices, or a ContractViolation carrying the Hall witness.

    ``host`` lets the caller pass a live view with already-consumed edges
    dropped. ``outside_window`` flags requests beyond the certificate's
    nominal robustness window (too many removals or too-low floor).
    """
    view = host if host is not None else cert.host
    removed = frozenset(removed_vertices)
    a_removed = len(removed & cert.bip.side_a)
    b_removed = len(removed & cert.bip.side_b)
    if a_removed != b_removed:
        raise UnbalancedPartsError(
            f"removals unbalanced: {a_removed} from A, {b_removed} from B"
        )
    stripped = remove_vertices_edges(view, removed)
    side_a = cert.bip.side_a - removed
    side_b = cert.bip.side_b - removed
    sub_bip = bipartition(side_a, side_b)
    outside = len(side_a) < (1 - cert.alpha) * cert.m
    if min_degree_floor is not None:
        live = side_a | side_b
        low = min((len(stripped.neighbors(v) & live) for v in live), default=0)
        outside = outside or low < min_degree_floor
    result = perfect_bipartite_matching(
        _restrict_to(stripped, side_a | side_b), sub_bip
    )
    if isinstance(result, HallViolator):
        cert.contract_failures += 1
        return ContractViolation(result, removed, outside)
    return result


def _restrict_to(g: Graph, live: frozenset[int]) -> Graph:
    return _graph_from_canonical(
        g.n, (e for e in g.edges if e[0] in live and e[1] in live)
    )
