"""Bit-exact text formats for graphs and factorizations.

Edge-list format: line 1 is ``n m``, followed by m lines ``u v`` with
``0 <= u < v < n``. Factorization format: line 1 is ``n t``, followed by
t lines of space-separated ``u-v`` tokens, one line per matching. Both
are ASCII with LF line endings and no comments, so golden files compare
byte-for-byte.
"""

from __future__ import annotations

from .errors import FormatError
from .graph import Factorization, Graph, Matching, from_edge_list


def write_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.num_edges()}"]
    lines.extend(f"{u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise FormatError("empty input", line=1)
    header = lines[0].split(" ")
    if len(header) != 2:
        raise FormatError("expected header 'n m'", line=1)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError("header fields must be integers", line=1) from None
    if n < 0 or m < 0:
        raise FormatError("negative header field", line=1)
    if len(lines) - 1 != m:
        raise FormatError(f"expected {m} edge lines, found {len(lines) - 1}", line=1)
    pairs = []
    for i, raw in enumerate(lines[1:], start=2):
        parts = raw.split(" ")
        if len(parts) != 2:
            raise FormatError("expected 'u v'", line=i)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError("endpoints must be integers", line=i) from None
        if not (0 <= u < v < n):
            raise FormatError(f"edge ({u},{v}) violates 0 <= u < v < n", line=i)
        pairs.append((u, v))
    try:
        return from_edge_list(n, pairs)
    except Exception as exc:  # duplicate edges surface with a line hint
        raise FormatError(str(exc)) from exc


def write_factorization(f: Factorization) -> str:
    lines = [f"{f.host.n} {len(f.matchings)}"]
    for m in f.matchings:
        lines.append(" ".join(f"{u}-{v}" for u, v in sorted(m.edges)))
    return "\n".join(lines) + "\n"


def parse_factorization(text: str, host: Graph | None = None) -> list[Matching]:
    """Parse matchings; host (when given) is only used to size-check n."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise FormatError("empty input", line=1)
    header = lines[0].split(" ")
    if len(header) != 2:
        raise FormatError("expected header 'n t'", line=1)
    try:
        n, t = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError("header fields must be integers", line=1) from None
    if host is not None and host.n != n:
        raise FormatError(f"factorization n={n} does not match graph n={host.n}", line=1)
    if len(lines) - 1 != t:
        raise FormatError(f"expected {t} matching lines, found {len(lines) - 1}", line=1)
    matchings = []
    for i, raw in enumerate(lines[1:], start=2):
        pairs = []
        if raw:
            for token in raw.split(" "):
                halves = token.split("-")
                if len(halves) != 2:
                    raise FormatError(f"bad token {token!r}", line=i)
                try:
                    u, v = int(halves[0]), int(halves[1])
                except ValueError:
                    raise FormatError(f"bad token {token!r}", line=i) from None
                if not (0 <= u < v < n):
                    raise FormatError(f"token {token!r} violates 0 <= u < v < n", line=i)
                pairs.append((u, v))
        try:
            matchings.append(Matching.from_pairs(pairs))
        except ValueError as exc:
            raise FormatError(str(exc), line=i) from exc
    return matchings
