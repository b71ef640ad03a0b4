"""Gap-Existence on lop-sided advertiser/impression graphs.

The impression side is never enumerated.  The solver only sees impressions
returned by ``new_neighbor`` and keeps them in an explicit active set
``I*``; ``list_neighbors`` answers adjacency questions restricted to a given
subset.  Each advertiser with budget ``B_a`` is expanded into ``B_a``
consecutive copies, each carrying one unit of water per pass.

Instance file format::

    g <n_advertisers> <n_impressions> <epsilon>
    a <id> <budget> list <impression-id>*
    a <id> <budget> interval <lo> <hi>
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol, Sequence

from .analysis import choose_pass_count
from .exact import budgeted_feasibility
from .waterfill import Allocation, _pour_into, remove_cycles

__all__ = [
    "AdjacencyOracle",
    "NeighborOracle",
    "CountingOracle",
    "OracleError",
    "GapFormatError",
    "GapInstance",
    "GapState",
    "GapResult",
    "process_advertiser",
    "run_gap_passes",
    "gap_decide",
    "interval_feasible",
    "parse_gap_instance",
    "write_gap_instance",
]


class OracleError(RuntimeError):
    """The adjacency oracle returned something inconsistent."""


class GapFormatError(ValueError):
    pass


class AdjacencyOracle(Protocol):
    def list_neighbors(self, a: int, s: Iterable[int]) -> list[int]: ...

    def new_neighbor(self, a: int, s: set[int]) -> int | None: ...


class NeighborOracle:
    """Oracle over per-advertiser neighborhoods, each an explicit list or an interval.

    Interval neighborhoods are answered by arithmetic, so the impression
    universe can be far larger than anything materialized.
    """

    def __init__(self, sources: Sequence[tuple]):
        self.sources = []
        for src in sources:
            if src[0] == "list":
                ids = tuple(sorted(set(int(i) for i in src[1])))
                self.sources.append(("list", ids, frozenset(ids)))
            elif src[0] == "interval":
                lo, hi = int(src[1]), int(src[2])
                if lo > hi:
                    raise ValueError(f"empty interval [{lo}, {hi}]")
                self.sources.append(("interval", lo, hi))
            else:
                raise ValueError(f"unknown neighborhood kind {src[0]!r}")

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[int, int]]) -> NeighborOracle:
        return cls([("interval", lo, hi) for lo, hi in intervals])

    @classmethod
    def from_lists(cls, lists: Iterable[Iterable[int]]) -> NeighborOracle:
        return cls([("list", list(ids)) for ids in lists])

    def list_neighbors(self, a: int, s: Iterable[int]) -> list[int]:
        src = self.sources[a]
        if src[0] == "interval":
            lo, hi = src[1], src[2]
            return [i for i in s if lo <= i <= hi]
        members = src[2]
        return [i for i in s if i in members]

    def new_neighbor(self, a: int, s: set[int]) -> int | None:
        src = self.sources[a]
        if src[0] == "interval":
            i, hi = src[1], src[2]
            while i <= hi and i in s:
                i += 1
            return i if i <= hi else None
        for i in src[1]:
            if i not in s:
                return i
        return None

    def degree(self, a: int) -> int:
        src = self.sources[a]
        return src[2] - src[1] + 1 if src[0] == "interval" else len(src[1])


class CountingOracle:
    """Wraps an oracle, counting calls and recording every impression it reveals."""

    def __init__(self, inner: AdjacencyOracle):
        self.inner = inner
        self.list_calls = 0
        self.new_calls = 0
        self.revealed: set[int] = set()
        self.queried: set[int] = set()

    def list_neighbors(self, a: int, s: Iterable[int]) -> list[int]:
        self.list_calls += 1
        s = list(s)
        self.queried.update(s)
        return self.inner.list_neighbors(a, s)

    def new_neighbor(self, a: int, s: set[int]) -> int | None:
        self.new_calls += 1
        i = self.inner.new_neighbor(a, s)
        if i is not None:
            self.revealed.add(i)
        return i


@dataclass
class GapInstance:
    budgets: tuple[int, ...]
    n_i: int
    oracle: AdjacencyOracle
    epsilon: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_i < 1:
            raise ValueError("n_i must be >= 1")
        if any(b < 1 for b in self.budgets):
            raise ValueError("budgets must be >= 1")

    @property
    def n_a(self) -> int:
        return len(self.budgets)

    @property
    def sum_budgets(self) -> int:
        return sum(self.budgets)


@dataclass
class GapState:
    """Active set, water levels (``alloc.load``) and copy-level flows."""

    eps: float
    k: int
    owner: list[int]
    alloc: Allocation = field(default_factory=Allocation)
    active: set[int] = field(default_factory=set)
    active_order: list[int] = field(default_factory=list)
    withheld: float = 0.0
    nbr_cache: dict[int, list[int]] = field(default_factory=dict)
    seen: dict[int, int] = field(default_factory=dict)
    low: dict[int, deque] = field(default_factory=dict)
    exhausted: set[int] = field(default_factory=set)
    cycle_buffer_edges: int = 0

    @property
    def threshold(self) -> float:
        return self.eps / 4 * self.k

    @property
    def peak_active(self) -> int:
        # I* only grows
        return len(self.active)

    @property
    def level(self) -> dict[int, float]:
        return self.alloc.load

    def active_flags(self) -> dict[int, int]:
        """``p_i = 1`` for impressions holding water."""
        return {i: int(self.alloc.load.get(i, 0.0) > 0) for i in self.active_order}

    def saturated(self) -> int:
        """Impressions with at least ``eps * k`` water."""
        bar = self.eps * self.k
        return sum(1 for x in self.alloc.load.values() if x >= bar)

    def support_edges(self) -> set[tuple[int, int]]:
        """Support projected from copies onto advertisers."""
        return {(self.owner[c], i) for c, i in self.alloc.flow}


def _refresh(st: GapState, a: int, oracle: AdjacencyOracle) -> list[int]:
    nbrs = st.nbr_cache.get(a)
    if nbrs is None:
        nbrs = st.nbr_cache[a] = []
        st.low[a] = deque()
    start = st.seen.get(a, 0)
    if start < len(st.active_order):
        found = oracle.list_neighbors(a, st.active_order[start:])
        st.seen[a] = len(st.active_order)
        nbrs.extend(found)
        st.low[a].extend(found)
    return nbrs


def process_advertiser(st: GapState, copy: int, eps: float, k: int, oracle: AdjacencyOracle) -> GapState:
    """One arrival of an advertiser copy carrying one unit of water.

    (i) raise I*-neighbors below ``(eps/4) k`` up to that level, stopping if
    the unit runs out; (ii) materialize one new neighbor; (iii) water-fill
    the rest over the I*-neighbors; (iv) remove cycles from the support.
    """
    a = st.owner[copy]
    alloc = st.alloc
    load = alloc.load
    alloc.cap[copy] = alloc.cap.get(copy, 0) + 1
    nbrs = _refresh(st, a, oracle)
    thr = eps / 4 * k
    budget = 1.0
    low = st.low[a]
    while low:
        i = low[0]
        lv = load.get(i, 0.0)
        if lv >= thr:
            low.popleft()
            continue
        need = thr - lv
        if need >= budget:
            alloc.add_flow(copy, i, budget)
            budget = 0.0
            break
        alloc.add_flow(copy, i, need)
        load[i] = thr
        budget -= need
        low.popleft()
    if budget > 0.0:
        if a not in st.exhausted:
            active = st.active
            i = oracle.new_neighbor(a, active)
            if i is None:
                st.exhausted.add(a)
            else:
                if i in active:
                    raise OracleError(f"new_neighbor({a}, I*) returned {i}, already in I*")
                active.add(i)
                st.active_order.append(i)
                before = len(nbrs)
                _refresh(st, a, oracle)
                if nbrs[before:] != [i]:
                    raise OracleError(f"new_neighbor({a}, I*) returned {i}, which list_neighbors denies")
        if nbrs:
            _pour_into(alloc, copy, nbrs, budget)
        else:
            st.withheld += budget
    if alloc.pending and len(alloc.pending) >= st.cycle_buffer_edges:
        remove_cycles(alloc)
    return st


def run_gap_passes(
    inst: GapInstance,
    eps: float,
    k: int,
    cycle_buffer_edges: int = 0,
    on_pass: Callable[[int, GapState], None] | None = None,
) -> GapState:
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if k < 1:
        raise ValueError("k must be >= 1")
    owner = [a for a, b in enumerate(inst.budgets) for _ in range(b)]
    st = GapState(eps, k, owner, cycle_buffer_edges=cycle_buffer_edges)
    oracle = inst.oracle
    n_copies = len(owner)
    for j in range(1, k + 1):
        t0 = time.perf_counter()
        for c in range(n_copies):
            process_advertiser(st, c, eps, k, oracle)
        remove_cycles(st.alloc)
        st.alloc.pass_times.append(time.perf_counter() - t0)
        if on_pass is not None:
            on_pass(j, st)
    return st


@dataclass
class GapResult:
    decision: bool
    k: int
    state: GapState
    reduced_budgets: tuple[int, ...]

    @property
    def answer(self) -> str:
        return "YES" if self.decision else "NO"


def gap_decide(inst: GapInstance, eps: float, k: int | None = None, cycle_buffer_edges: int = 0) -> GapResult:
    """YES iff the water-filling support admits budgets ``floor((1 - eps) B_a)``."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if k is None:
        k = choose_pass_count(eps, inst.n_i, inst.sum_budgets)
    st = run_gap_passes(inst, eps, k, cycle_buffer_edges)
    reduced = tuple(math.floor((1 - eps) * b) for b in inst.budgets)
    ok = budgeted_feasibility(st.support_edges(), reduced)
    return GapResult(ok, k, st, reduced)


def interval_feasible(intervals: Sequence[tuple[int, int]], demands: Sequence[int]) -> bool:
    """Exact check that advertiser ``a`` can get ``demands[a]`` distinct points of its interval.

    Earliest-deadline-first sweep; it never walks empty stretches of the line.
    """
    starts = sorted((lo, hi, a) for a, (lo, hi) in enumerate(intervals) if demands[a] > 0)
    remaining = list(demands)
    heap: list[tuple[int, int]] = []
    idx = 0
    pos = starts[0][0] if starts else 0
    while idx < len(starts) or heap:
        if not heap and pos < starts[idx][0]:
            pos = starts[idx][0]
        while idx < len(starts) and starts[idx][0] <= pos:
            lo, hi, a = starts[idx]
            heapq.heappush(heap, (hi, a))
            idx += 1
        hi, a = heap[0]
        if hi < pos:
            return False
        remaining[a] -= 1
        if remaining[a] == 0:
            heapq.heappop(heap)
        pos += 1
    return True


def parse_gap_instance(text: bytes | str) -> GapInstance:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    header = None
    entries: dict[int, tuple[int, tuple]] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if header is None:
                if tok[0] != "g" or len(tok) != 4:
                    raise GapFormatError(f"line {lineno}: malformed header, expected 'g <|A|> <|I|> <epsilon>'")
                header = (int(tok[1]), int(tok[2]), float(tok[3]))
                continue
            if tok[0] != "a" or len(tok) < 4:
                raise GapFormatError(f"line {lineno}: unexpected line {line!r}")
            a, budget = int(tok[1]), int(tok[2])
            if not 0 <= a < header[0]:
                raise GapFormatError(f"line {lineno}: advertiser id {a} out of range")
            if a in entries:
                raise GapFormatError(f"line {lineno}: advertiser {a} repeated")
            if tok[3] == "list":
                ids = [int(t) for t in tok[4:]]
                if any(not 0 <= i < header[1] for i in ids):
                    raise GapFormatError(f"line {lineno}: impression id out of range")
                entries[a] = (budget, ("list", ids))
            elif tok[3] == "interval" and len(tok) == 6:
                lo, hi = int(tok[4]), int(tok[5])
                if not 0 <= lo <= hi < header[1]:
                    raise GapFormatError(f"line {lineno}: bad interval [{lo}, {hi}]")
                entries[a] = (budget, ("interval", lo, hi))
            else:
                raise GapFormatError(f"line {lineno}: unknown oracle kind {' '.join(tok[3:])!r}")
        except ValueError as exc:
            if isinstance(exc, GapFormatError):
                raise
            raise GapFormatError(f"line {lineno}: {exc}") from None
    if header is None:
        raise GapFormatError("missing 'g' header")
    if sorted(entries) != list(range(header[0])):
        raise GapFormatError("every advertiser must appear exactly once")
    budgets = tuple(entries[a][0] for a in range(header[0]))
    oracle = NeighborOracle([entries[a][1] for a in range(header[0])])
    try:
        return GapInstance(budgets, header[1], oracle, header[2])
    except ValueError as exc:
        raise GapFormatError(str(exc)) from None


def write_gap_instance(inst: GapInstance, eps: float | None = None) -> bytes:
    if not isinstance(inst.oracle, NeighborOracle):
        raise TypeError("only NeighborOracle instances can be serialized")
    eps = inst.epsilon if eps is None else eps
    lines = [f"g {inst.n_a} {inst.n_i} {eps!r}"]
    for a, (b, src) in enumerate(zip(inst.budgets, inst.oracle.sources)):
        if src[0] == "interval":
            lines.append(f"a {a} {b} interval {src[1]} {src[2]}")
        else:
            lines.append(" ".join([f"a {a} {b} list", *map(str, src[1])]).rstrip())
    return ("\n".join(lines) + "\n").encode("ascii")
