"""Bipartite graphs, vertex-arrival streams and the text stream format.

Left vertices (the ``P`` side) arrive in the stream together with their full
neighbor lists; right vertices (the ``Q`` side) are known up front.  Both
sides use dense 0-based integer ids.

Stream file format (ASCII, LF line endings)::

    # comment lines are ignored
    p <n_p> <n_q>
    v <left-id> <right-id> <right-id> ...

One ``v`` line per arrival, in arrival order.  Every left vertex appears
exactly once.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BipartiteGraph",
    "ArrivalStream",
    "Matching",
    "StreamFormatError",
    "parse_stream",
    "write_stream",
    "validate_matching",
]


class StreamFormatError(ValueError):
    """Raised when a stream file is malformed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BipartiteGraph:
    n_p: int
    n_q: int
    adj: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_p < 0 or self.n_q < 0:
            raise ValueError("vertex counts must be nonnegative")
        if len(self.adj) != self.n_p:
            raise ValueError(f"expected {self.n_p} adjacency lists, got {len(self.adj)}")
        for u, nbrs in enumerate(self.adj):
            for a, b in zip(nbrs, nbrs[1:]):
                if a >= b:
                    raise ValueError(f"adjacency of {u} is not strictly increasing")
            if nbrs and (nbrs[0] < 0 or nbrs[-1] >= self.n_q):
                raise ValueError(f"id out of range in adjacency of {u}")

    @classmethod
    def from_lists(cls, n_p: int, n_q: int, adj: Iterable[Iterable[int]]) -> BipartiteGraph:
        """Build a graph, sorting each list and rejecting duplicates."""
        lists = []
        for u, nbrs in enumerate(adj):
            s = sorted(nbrs)
            if len(set(s)) != len(s):
                raise ValueError(f"duplicate neighbor in adjacency of {u}")
            lists.append(tuple(s))
        return cls(n_p, n_q, tuple(lists))

    @classmethod
    def from_edges(cls, n_p: int, n_q: int, edges: Iterable[tuple[int, int]]) -> BipartiteGraph:
        adj: list[set[int]] = [set() for _ in range(n_p)]
        for u, v in edges:
            adj[u].add(v)
        return cls(n_p, n_q, tuple(tuple(sorted(s)) for s in adj))

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adj) for v in nbrs]

    def has_edge(self, u: int, v: int) -> bool:
        if not 0 <= u < self.n_p:
            return False
        nbrs = self.adj[u]
        i = bisect_left(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def subgraph(self, edges: Iterable[tuple[int, int]]) -> BipartiteGraph:
        """Graph on the same vertex sets keeping only ``edges``."""
        return BipartiteGraph.from_edges(self.n_p, self.n_q, edges)


@dataclass(frozen=True)
class ArrivalStream:
    """A graph plus the order in which its left vertices arrive.

    ``meta`` carries generator bookkeeping (e.g. a known optimum) and is not
    part of equality or of the serialized stream body.
    """

    graph: BipartiteGraph
    order: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        n = self.graph.n_p
        if len(self.order) != n or sorted(self.order) != list(range(n)):
            raise ValueError("order is not a permutation of the left vertices")

    def arrivals(self) -> Iterable[tuple[int, tuple[int, ...]]]:
        """Yield ``(u, neighbors)`` in arrival order; identical on every call."""
        adj = self.graph.adj
        for u in self.order:
            yield u, adj[u]

    def reordered(self, policy: str, seed: int | None = None) -> ArrivalStream:
        """Same graph with the current order kept (``given``), reversed, or shuffled by ``seed``."""
        if policy == "given":
            order = self.order
        elif policy == "reverse":
            order = self.order[::-1]
        elif policy == "random":
            rng = np.random.Generator(np.random.PCG64(seed))
            order = tuple(self.order[int(x)] for x in rng.permutation(len(self.order)))
        else:
            raise ValueError(f"unknown order policy {policy!r}")
        return ArrivalStream(self.graph, order, dict(self.meta))


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> Matching:
        return cls(tuple(sorted((int(u), int(v)) for u, v in pairs)))


def validate_matching(g: BipartiteGraph, m: Matching | Sequence[tuple[int, int]]) -> bool:
    pairs = m.pairs if isinstance(m, Matching) else m
    seen_l: set[int] = set()
    seen_r: set[int] = set()
    for u, v in pairs:
        if u in seen_l or v in seen_r:
            return False
        if not g.has_edge(u, v):
            return False
        seen_l.add(u)
        seen_r.add(v)
    return True


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise StreamFormatError(f"non-integer token in {tokens!r}", lineno) from None


def parse_stream(text: bytes | str) -> ArrivalStream:
    if isinstance(text, bytes):
        try:
            text = text.decode("ascii")
        except UnicodeDecodeError as exc:
            raise StreamFormatError(f"non-ASCII input: {exc}") from None
    header: tuple[int, int] | None = None
    adj: list[tuple[int, ...] | None] = []
    order: list[int] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        if header is None:
            if tag != "p" or len(tokens) != 3:
                raise StreamFormatError("malformed header, expected 'p <n_p> <n_q>'", lineno)
            n_p, n_q = _ints(tokens[1:], lineno)
            if n_p < 0 or n_q < 0:
                raise StreamFormatError("malformed header, negative vertex count", lineno)
            header = (n_p, n_q)
            adj = [None] * n_p
            continue
        if tag == "p":
            raise StreamFormatError("duplicate header", lineno)
        if tag != "v" or len(tokens) < 2:
            raise StreamFormatError(f"unexpected line {line!r}", lineno)
        ids = _ints(tokens[1:], lineno)
        u, nbrs = ids[0], ids[1:]
        n_p, n_q = header
        if not 0 <= u < n_p:
            raise StreamFormatError(f"id out of range: left id {u}", lineno)
        if adj[u] is not None:
            raise StreamFormatError(f"non-permutation order: left id {u} repeated", lineno)
        for v in nbrs:
            if not 0 <= v < n_q:
                raise StreamFormatError(f"id out of range: right id {v}", lineno)
        if len(set(nbrs)) != len(nbrs):
            raise StreamFormatError(f"duplicate neighbor for left id {u}", lineno)
        adj[u] = tuple(sorted(nbrs))
        order.append(u)
    if header is None:
        raise StreamFormatError("malformed header, missing 'p' line")
    missing = [u for u, a in enumerate(adj) if a is None]
    if missing:
        raise StreamFormatError(f"non-permutation order: left ids {missing[:5]} never arrive")
    g = BipartiteGraph(header[0], header[1], tuple(adj))  # type: ignore[arg-type]
    return ArrivalStream(g, tuple(order))


def write_stream(s: ArrivalStream) -> bytes:
    lines = [f"p {s.graph.n_p} {s.graph.n_q}"]
    for u, nbrs in s.arrivals():
        lines.append(" ".join(["v", str(u), *map(str, nbrs)]))
    return ("\n".join(lines) + "\n").encode("ascii")
