"""Five-stage orchestration: certificate extraction, partition, per-subgraph
nibble coloring, extension to perfect matchings, and completion.

Asymptotic parameter couplings are evaluated into a constraint report and
never enforced; small instances run through documented fallbacks (palette
fallback to proper-coloring classes, sparsification escalation, greedy
full-width completion peels), every one of which is flagged in the run
report. The hard gate is unconditional: any returned factorization passes
verification with perfect matchings required.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

from .completion import complete
from .errors import (
    DomainError,
    InvariantBrokenError,
    PreconditionViolatedError,
    ResampleGoodGraphError,
    RetryBudgetExhaustedError,
)
from .extension import ExtensionInstance, ExtensionResult, HypothesisThresholds, extend_all
from .errors import DiracViolatedError, GreedyStuckError
from .goodgraph import GoodGraphCertificate, extract_good
from .graph import (
    Edge,
    Factorization,
    Graph,
    Matching,
    _graph_from_canonical,
    remove_edges,
    union_graphs,
    verify_factorization,
)
from .matching import misra_gries_color
from .nibble import NibbleParams, check_equitability, run_nibble
from .partition import PartitionPlan, build_partition
from .util import derive_seed


def lower_bound_log(n: int, d: int, C: float | None = None) -> float:
    """Natural log of the factorization-count lower bound
    (dn/2) * (ln d - 2 + ln(1 - n^(-1/C))).

    ``C=None`` gives the large-n simplification (dn/2)(ln d - 2).
    """
    if n < 2 or n % 2 != 0:
        raise DomainError(f"n must be even and >= 2, got {n}")
    if not 1 <= d <= n - 1:
        raise DomainError(f"d must be in 1..n-1, got {d}")
    term = 0.0
    if C is not None:
        if C <= 0:
            raise DomainError("C must be positive")
        shrink = 1.0 - n ** (-1.0 / C)
        if shrink <= 0:
            raise DomainError("1 - n^(-1/C) is nonpositive")
        term = math.log(shrink)
    return (d * n / 2.0) * (math.log(d) - 2.0 + term)


@dataclass(frozen=True)
class RunConfig:
    epsilon: float
    p: float
    K: int
    tau_partition: float
    tau_nibble: float
    seed: int = 0
    bound_c: float | None = None
    degenerate_mode: bool = False
    fallback_matchings: bool = True
    good_budget: int = 20
    partition_budget: int = 20
    nibble_budget: int = 3
    extension_budget: int = 40
    completion_budget: int = 50
    resample_budget: int = 5
    good_slack: float = 1.0
    partition_slack: float = 2.0
    nibble_slack: float = 5.0
    completion_slack: float = 2.0
    min_good_degree: int | None = None
    constraint_notes: tuple[str, ...] = ()


def desk_defaults(n: int, d: int, seed: int = 0) -> RunConfig:
    """Working defaults for bench-size instances; every analysis coupling
    these violate shows up in the run report."""
    eps = min(0.3, max(0.01, 0.8 * (d / n - 0.5))) if d / n > 0.5 else 0.01
    K = 1 if n < 200 else 2
    return RunConfig(
        epsilon=eps,
        p=0.25,
        K=K,
        tau_partition=0.5,
        tau_nibble=0.2,
        seed=seed,
        degenerate_mode=(K == 1),
    )


def constraint_report(n: int, d: int, cfg: RunConfig) -> list[str]:
    """Which asymptotic couplings fail at this instance size. ``A >> B`` is
    audited as A >= 100*B."""
    out: list[str] = []
    eps, p, K = cfg.epsilon, cfg.p, cfg.K
    logn = math.log(max(n, 2))
    if d < n / 2 + eps * n:
        out.append(f"d = {d} below n/2 + eps*n = {n / 2 + eps * n:.2f}")
    if eps ** 4 * n < 100 * logn:
        out.append("eps^4 not >> log(n)/n")
    if p * n * eps ** 3 < 100 * logn:
        out.append("p not >> log(n)/(n*eps^3)")
    if not logn ** 2 <= K <= n ** (1 / 300):
        out.append(f"K = {K} outside [log^2 n, n^(1/300)]")
    if cfg.tau_partition <= 100 / K:
        out.append(f"tau_partition = {cfg.tau_partition} not above 100/K = {100 / K}")
    r1_scale = d * p / 2
    if not n ** 0.1 * 100 <= r1_scale or not r1_scale * 100 <= n:
        out.append("r1 = Theta(dp) outside (n^(1/10), n) with margin 100")
    if r1_scale * (eps / 10) ** 2 < 100 * logn:
        out.append("r1*alpha^2 not >> log n")
    return out


def paper_defaults(n: int, d: int, J: float = 1.0, seed: int = 0) -> RunConfig:
    """The analysis parameter chain evaluated at (n, d): C = 2000*max(J,10),
    eps = n^(-1/C), p = eps^2, K = floor(eps^-10), tau = 200/K, with the
    violated couplings recorded on the config."""
    if n % 2 != 0:
        raise DomainError("n must be even")
    C = 2000 * max(J, 10.0)
    eps = n ** (-1.0 / C)
    p = eps ** 2
    K = math.floor(eps ** -10)
    tau_partition = 200.0 / K
    delta_scale = max(2.0, d * p / 2)
    tau_nibble = min(0.5, max(0.05, delta_scale ** (-1.0 / (10 * J))))
    cfg = RunConfig(
        epsilon=eps,
        p=p,
        K=K,
        tau_partition=tau_partition,
        tau_nibble=tau_nibble,
        seed=seed,
        bound_c=C,
        degenerate_mode=(K == 1),
        partition_slack=1.0,
        nibble_slack=1.0,
        completion_slack=1.0,
    )
    notes = constraint_report(n, d, cfg)
    return replace(cfg, constraint_notes=tuple(notes))


@dataclass
class StageRecord:
    name: str
    retries: int = 0
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class RunReport:
    factorization: Factorization
    stages: list[StageRecord]
    violations: list[str]
    timing: dict[str, float]
    canonical_hash: str
    valid: bool
    config: RunConfig
    n: int
    d: int

    def to_json_dict(self, include_perf: bool = True) -> dict:
        doc = {
            "schema": 1,
            "n": self.n,
            "d": self.d,
            "config": {
                "epsilon": self.config.epsilon,
                "p": self.config.p,
                "K": self.config.K,
                "tau_partition": self.config.tau_partition,
                "tau_nibble": self.config.tau_nibble,
                "seed": self.config.seed,
                "degenerate_mode": self.config.degenerate_mode,
                "fallback_matchings": self.config.fallback_matchings,
            },
            "stages": [
                {
                    "name": s.name,
                    "retries": s.retries,
                    "violations": list(s.violations),
                    "notes": list(s.notes),
                }
                for s in self.stages
            ],
            "hash": self.canonical_hash,
            "valid": self.valid,
        }
        if include_perf:
            doc["perf"] = {k: round(v, 6) for k, v in self.timing.items()}
        return doc


def canonical_form(matchings) -> tuple[tuple[Edge, ...], ...]:
    """Order-free normal form: matchings as sorted edge tuples, sorted."""
    return tuple(sorted(tuple(sorted(m.edges)) for m in matchings))


def canonical_hash(matchings) -> str:
    return hashlib.sha256(repr(canonical_form(matchings)).encode()).hexdigest()


def _step1_certificate(
    g: Graph, cfg: RunConfig, round_idx: int, record: StageRecord
) -> GoodGraphCertificate:
    d = g.regular_degree()
    floor_r1 = (
        cfg.min_good_degree
        if cfg.min_good_degree is not None
        else max(2, (d or 2) // 6)
    )
    p_eff = cfg.p
    while True:
        try:
            cert = extract_good(
                g,
                cfg.epsilon,
                p_eff,
                derive_seed(cfg.seed, "good", round_idx, repr(p_eff)),
                cfg.good_budget,
                bip_slack=cfg.good_slack,
            )
        except RetryBudgetExhaustedError:
            cert = None
        record.retries += 1
        if cert is not None and cert.r1 >= min(floor_r1, max(1, int((d or 1) / 2))):
            if p_eff != cfg.p:
                record.violations.append(
                    f"sparsification escalated from p={cfg.p} to p={p_eff}"
                )
            record.notes.extend(cert.provenance.get("notes", []))
            return cert
        if cert is not None:
            record.notes.append(
                f"certificate degree {cert.r1} below floor {floor_r1} at p={p_eff}"
            )
        if p_eff >= 1.0:
            raise RetryBudgetExhaustedError(
                "certificate extraction failed even with p escalated to 1.0"
            )
        p_eff = min(1.0, 2 * p_eff)


def _coloring_classes(edges: list[Edge], n: int) -> list[Matching]:
    if not edges:
        return []
    sub = _graph_from_canonical(n, edges)
    classes = misra_gries_color(sub).classes()
    return sorted(classes, key=lambda m: -m.size())


def _step4_matchings(
    g_prime: Graph,
    plan: PartitionPlan,
    cfg: RunConfig,
    round_idx: int,
    nibble_rec: StageRecord,
    ext_rec: StageRecord,
) -> list[Matching]:
    extended: list[Matching] = []
    for i in range(plan.K ** 3):
        _, outer_edges, _ = plan.split_edges(i)
        w_i = plan.reservoir(i)
        u_i = plan.outer(i)
        h_i = plan.subgraph_h(i)
        candidates: list[Matching] = []
        if outer_edges:
            d_graph = _graph_from_canonical(g_prime.n, outer_edges)
            delta_i = min(
                (len(d_graph.neighbors(v)) for v in u_i), default=0
            )
            outcome = None
            if delta_i >= 1:
                params = NibbleParams(tau=cfg.tau_nibble, delta=delta_i)
                for attempt in range(cfg.nibble_budget):
                    trial = run_nibble(
                        d_graph, params,
                        derive_seed(cfg.seed, "nibble", round_idx, i, attempt),
                    )
                    eq = check_equitability(
                        trial, cfg.tau_nibble, d_graph.max_degree(), cfg.nibble_slack
                    )
                    nibble_rec.retries += 1
                    if eq.ok:
                        outcome = trial
                        break
            if outcome is not None:
                candidates = sorted(
                    (m for m in outcome.matchings if m.size() > 0),
                    key=lambda m: -m.size(),
                )
            elif cfg.fallback_matchings:
                nibble_rec.violations.append(
                    f"subgraph {i}: equitability unmet; proper-coloring fallback"
                )
                candidates = _coloring_classes(outer_edges, g_prime.n)
            else:
                nibble_rec.violations.append(
                    f"subgraph {i}: equitability unmet; no fallback configured"
                )
        if not candidates:
            continue
        trims = 0
        while candidates and trims < cfg.extension_budget:
            inst = ExtensionInstance(
                h_i, frozenset(u_i), frozenset(w_i), tuple(candidates)
            )
            try:
                res = extend_all(inst)
            except (GreedyStuckError, DiracViolatedError) as exc:
                trims += 1
                keep = exc.index if exc.index is not None else len(candidates) - 1
                if keep <= 0:
                    candidates = []
                    ext_rec.violations.append(
                        f"subgraph {i}: no matching could be extended"
                    )
                    break
                candidates = candidates[:keep]
                continue
            if trims:
                ext_rec.notes.append(
                    f"subgraph {i}: trimmed to {len(candidates)} matchings"
                )
            extended.extend(res.matchings)
            ext_rec.retries += trims
            break
    return extended


def run(g: Graph, cfg: RunConfig) -> RunReport:
    """Execute the staged construction and return the verified factorization.

    Raises PreconditionViolatedError for inputs outside the supported
    regime and RetryBudgetExhaustedError when every resampling round fails.
    """
    t_start = time.perf_counter()
    timing: dict[str, float] = {}
    d = g.regular_degree()
    if g.n % 2 != 0:
        raise PreconditionViolatedError(f"vertex count {g.n} is odd")
    if d is None:
        raise PreconditionViolatedError("input graph is not regular")
    if d < g.n / 2:
        raise PreconditionViolatedError(f"degree {d} below n/2 = {g.n / 2}")
    if not cfg.degenerate_mode and d < g.n / 2 + cfg.epsilon * g.n - 1e-9:
        raise PreconditionViolatedError(
            f"degree {d} below n/2 + eps*n; rerun in degenerate mode"
        )
    violations = constraint_report(g.n, d, cfg)
    stages: list[StageRecord] = []
    last_error: Exception | None = None

    for round_idx in range(cfg.resample_budget):
        good_rec = StageRecord("good_subgraph")
        part_rec = StageRecord("partition")
        nib_rec = StageRecord("nibble")
        ext_rec = StageRecord("extension")
        comp_rec = StageRecord("completion")
        round_stages = [good_rec, part_rec, nib_rec, ext_rec, comp_rec]

        t0 = time.perf_counter()
        try:
            cert = _step1_certificate(g, cfg, round_idx, good_rec)
        except RetryBudgetExhaustedError as exc:
            last_error = exc
            stages = round_stages
            continue
        timing["good_subgraph"] = time.perf_counter() - t0

        g_prime = remove_edges(g, cert.host.edges)

        t0 = time.perf_counter()
        extended: list[Matching] = []
        degenerate = cfg.degenerate_mode or cfg.K <= 1
        if degenerate:
            part_rec.notes.append(
                "degenerate mode: single reservoir covers all vertices; "
                "outer part empty, all residual edges go to completion"
            )
        else:
            plan = None
            try:
                plan = build_partition(
                    g_prime,
                    cfg.K,
                    cfg.tau_partition,
                    derive_seed(cfg.seed, "partition", round_idx),
                    cfg.partition_budget,
                    cfg.partition_slack,
                )
                part_rec.retries = plan.attempts
            except RetryBudgetExhaustedError:
                part_rec.violations.append(
                    "partition conclusions unmet; continuing without partition stage"
                )
            if plan is not None:
                extended = _step4_matchings(
                    g_prime, plan, cfg, round_idx, nib_rec, ext_rec
                )
        timing["partition_nibble_extension"] = time.perf_counter() - t0

        if extended:
            used = frozenset(e for m in extended for e in m.edges)
            residual = remove_edges(g_prime, used)
        else:
            residual = g_prime
        r2_graph_degree = residual.regular_degree()
        if r2_graph_degree is None:
            raise InvariantBrokenError(
                "residual after removing perfect matchings is irregular"
            )

        t0 = time.perf_counter()
        host = union_graphs(cert.host, residual)
        comp_notes: list[str] = []
        try:
            tail = complete(
                cert,
                host,
                derive_seed(cfg.seed, "complete", round_idx),
                cfg.completion_budget,
                slack=cfg.completion_slack,
                notes=comp_notes,
            )
        except ResampleGoodGraphError as exc:
            comp_rec.notes.extend(comp_notes)
            comp_rec.violations.append(str(exc))
            last_error = exc
            stages = round_stages
            continue
        comp_rec.notes.extend(comp_notes)
        timing["completion"] = time.perf_counter() - t0

        all_matchings = list(extended) + list(tail.matchings)
        report = verify_factorization(g, all_matchings, require_perfect=True)
        if not report.ok:
            raise InvariantBrokenError(
                f"assembled factorization failed verification: {report}"
            )
        timing["total"] = time.perf_counter() - t_start
        return RunReport(
            factorization=Factorization(
                tuple(Matching(frozenset(m.edges)) for m in all_matchings), g
            ),
            stages=round_stages,
            violations=violations,
            timing=timing,
            canonical_hash=canonical_hash(all_matchings),
            valid=True,
            config=cfg,
            n=g.n,
            d=d,
        )
    raise RetryBudgetExhaustedError(
        f"pipeline failed after {cfg.resample_budget} certificate rounds",
        context=last_error,
    )


@dataclass
class DistinctReport:
    distinct: int
    successes: int
    failures: int
    counts: dict[str, int]
    forms: dict[str, tuple[tuple[Edge, ...], ...]]


def generate_distinct(g: Graph, cfg: RunConfig, num_seeds: int) -> DistinctReport:
    """Run the pipeline across derived seeds and dedupe the canonical forms
    (a factorization counts as an unordered partition of the edge set)."""
    counts: dict[str, int] = {}
    forms: dict[str, tuple[tuple[Edge, ...], ...]] = {}
    successes = failures = 0
    for idx in range(num_seeds):
        sub = replace(cfg, seed=derive_seed(cfg.seed, "distinct", idx))
        try:
            report = run(g, sub)
        except (RetryBudgetExhaustedError, PreconditionViolatedError):
            failures += 1
            continue
        successes += 1
        form = canonical_form(report.factorization.matchings)
        key = report.canonical_hash
        counts[key] = counts.get(key, 0) + 1
        forms[key] = form
    return DistinctReport(len(counts), successes, failures, counts, forms)
