"""Multipass fractional water-filling over a vertex-arrival stream.

Each arrival of a left vertex ``u`` raises its capacity by one and pours one
unit of water onto its least loaded neighbors, lifting them together to a
common level.  After the pour, flow is rerouted around any cycle of the
support so the support stays a forest.  Replaying the stream ``k`` times
gives the ``k``-pass allocation; its value is ``sum_v min(k, load_v) / k``.

Right vertices are stored in the support forest under the node key
``-(v + 1)`` so both sides share one integer namespace.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

from .forest import DynamicForest
from .graph import ArrivalStream

__all__ = [
    "Allocation",
    "PassConfig",
    "pour_level",
    "water_fill",
    "process_vertex",
    "remove_cycles",
    "run_multipass",
    "matching_value",
    "to_fractional_matching",
]


def _rnode(v: int) -> int:
    return -v - 1


@dataclass(frozen=True)
class PassConfig:
    """Run parameters.

    ``cycle_buffer_edges`` defers cycle removal until that many new support
    edges have accumulated (0 removes cycles after every arrival).  Pending
    cycles are always cleared at the end of a pass.  ``exact`` switches the
    arithmetic to :class:`fractions.Fraction`.
    """

    passes: int = 1
    cycle_buffer_edges: int = 0
    tolerance: float = 1e-9
    exact: bool = False

    def __post_init__(self) -> None:
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.cycle_buffer_edges < 0:
            raise ValueError("cycle_buffer_edges must be >= 0")


@dataclass
class Allocation:
    """Mutable water-filling state.

    ``flow`` holds strictly positive edge amounts only, so its keys are the
    support.  ``withheld`` counts units that could not be dispensed because
    the arriving vertex had no neighbors.
    """

    exact: bool = False
    flow: dict[tuple[Hashable, int], float] = field(default_factory=dict)
    load: dict[int, float] = field(default_factory=dict)
    out: dict[Hashable, float] = field(default_factory=dict)
    cap: dict[Hashable, int] = field(default_factory=dict)
    withheld: int = 0
    pending: list[tuple[Hashable, int]] = field(default_factory=list)
    forest: DynamicForest = field(default_factory=DynamicForest, repr=False)
    pass_times: list[float] = field(default_factory=list)

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def unit(self):
        return Fraction(1) if self.exact else 1.0

    def add_flow(self, u: Hashable, v: int, amount) -> None:
        key = (u, v)
        f = self.flow.get(key)
        if f is None:
            self.flow[key] = amount
            self.pending.append(key)
        else:
            self.flow[key] = f + amount
        self.load[v] = self.load.get(v, self.zero) + amount
        self.out[u] = self.out.get(u, self.zero) + amount

    def support(self) -> list[tuple[Hashable, int]]:
        return list(self.flow)

    def total_water(self):
        return sum(self.load.values(), self.zero)

    def loads(self, n_q: int) -> list:
        z = self.zero
        return [self.load.get(v, z) for v in range(n_q)]


def pour_level(levels: Sequence, amount) -> float:
    """Common level ``t`` solving ``sum(max(0, t - l) for l in levels) == amount``."""
    s = sorted(levels)
    n = len(s)
    if n == 0:
        raise ValueError("cannot pour onto an empty neighborhood")
    acc = amount
    j = 0
    while True:
        acc += s[j]
        j += 1
        t = acc / j
        if j == n or t <= s[j]:
            return t


def water_fill(a: Allocation, u: Hashable, nbrs: Iterable[int], amount=None) -> Allocation:
    """Pour ``amount`` (default one unit) from ``u`` onto its least loaded neighbors."""
    if amount is None:
        amount = a.unit
    nbrs = list(nbrs)
    if not nbrs:
        a.withheld += 1
        return a
    _pour_into(a, u, nbrs, amount)
    return a


def _pour_into(a: Allocation, u: Hashable, nbrs: Sequence[int], amount) -> None:
    load = a.load
    flow = a.flow
    pending = a.pending
    z = a.zero
    levels = [load.get(v, z) for v in nbrs]
    t = pour_level(levels, amount)
    poured = z
    for v, lv in zip(nbrs, levels):
        if lv < t:
            d = t - lv
            key = (u, v)
            f = flow.get(key)
            if f is None:
                flow[key] = d
                pending.append(key)
            else:
                flow[key] = f + d
            load[v] = t
            poured += d
    a.out[u] = a.out.get(u, z) + poured


def process_vertex(a: Allocation, u: Hashable, nbrs: Sequence[int], cfg: PassConfig) -> Allocation:
    a.cap[u] = a.cap.get(u, 0) + 1
    water_fill(a, u, nbrs)
    if a.pending and len(a.pending) >= cfg.cycle_buffer_edges:
        remove_cycles(a)
    return a


def _hang(parent: dict, x: int, y: int) -> None:
    """Evert ``x``'s tree at ``x`` and attach it below ``y``."""
    if y not in parent:
        parent[y] = None
    prev = y
    cur = x
    while cur is not None:
        nxt = parent.get(cur)
        parent[cur] = prev
        prev, cur = cur, nxt


def remove_cycles(a: Allocation) -> Allocation:
    """Reroute flow around cycles until the support is a forest.

    Each pending support edge is either linked into the forest or closes a
    cycle with a tree path.  The cycle's edges are alternately marked +/-;
    the orientation whose smallest minus-edge flow is larger is used, and
    that amount is pushed, zeroing at least one edge.  Vertex totals are
    unchanged.
    """
    parent = a.forest.parent
    flow = a.flow
    pending, a.pending = a.pending, []
    for key in pending:
        if key not in flow:
            continue
        u, v = key
        y = -v - 1
        # evert so u is its tree's root; consecutive pending edges usually share u
        if parent.get(u) is not None:
            prev = None
            cur = u
            while cur is not None:
                nxt = parent[cur]
                parent[cur] = prev
                prev, cur = cur, nxt
        up_y = [y]
        z = parent.get(y)
        while z is not None and z != u:
            up_y.append(z)
            z = parent[z]
        if z is None:
            _hang(parent, y, u)
            continue
        up_y.append(u)
        path = up_y[::-1]
        m = len(path) - 1
        edges = [
            (p, -q - 1) if p >= 0 else (q, -p - 1)
            for p, q in zip(path, path[1:])
        ]
        edges.append(key)
        amounts = [flow[e] for e in edges]
        even_min = min(amounts[0::2])
        odd_min = min(amounts[1::2])
        if even_min >= odd_min:
            parity, delta = 0, even_min
        else:
            parity, delta = 1, odd_min
        new_survives = True
        cut_any = False
        for j in range(m + 1):
            e = edges[j]
            f = amounts[j]
            if j % 2 != parity:
                flow[e] = f + delta
            elif f == delta:
                del flow[e]
                if j == m:
                    new_survives = False
                else:
                    p, q = path[j], path[j + 1]
                    if parent.get(p) == q:
                        parent[p] = None
                    else:
                        parent[q] = None
                    cut_any = True
            else:
                flow[e] = f - delta
        if new_survives:
            assert cut_any, "cycle rerouting left the cycle intact"
            _hang(parent, y, u)
    return a


def run_multipass(
    s: ArrivalStream,
    cfg: PassConfig,
    on_pass: Callable[[int, Allocation], None] | None = None,
) -> Allocation:
    """Replay ``s`` for ``cfg.passes`` passes; ``on_pass(j, a)`` fires after pass ``j``."""
    a = Allocation(exact=cfg.exact)
    for j in range(1, cfg.passes + 1):
        t0 = time.perf_counter()
        for u, nbrs in s.arrivals():
            process_vertex(a, u, nbrs, cfg)
        remove_cycles(a)
        a.pass_times.append(time.perf_counter() - t0)
        if on_pass is not None:
            on_pass(j, a)
    return a


def matching_value(a: Allocation, k: int):
    kk = Fraction(k) if a.exact else float(k)
    total = sum((min(kk, x) for x in a.load.values()), a.zero)
    return total / kk


def to_fractional_matching(a: Allocation, k: int) -> dict[tuple[Hashable, int], float]:
    """Scale flows by ``1/k`` and cap each right vertex at total one."""
    kk = Fraction(k) if a.exact else float(k)
    x = {}
    for (u, v), f in a.flow.items():
        lv = a.load[v]
        x[(u, v)] = f / lv if lv > kk else f / kk
    return x
