"""Exact matching oracles: Hopcroft-Karp, brute force, max-flow feasibility.

These are the yardsticks the streaming allocations are measured against,
plus the integral rounding of a fractional allocation on its support.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Mapping, Sequence

from .graph import BipartiteGraph, Matching
from .waterfill import Allocation

__all__ = [
    "FlowNetwork",
    "hopcroft_karp",
    "brute_force_max_matching",
    "round_on_support",
    "budgeted_feasibility",
]


def hopcroft_karp(g: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching in O(E sqrt(V))."""
    adj = g.adj
    n_p = g.n_p
    match_l = [-1] * n_p
    match_r = [-1] * g.n_q
    dist = [0] * n_p

    # greedy warm start
    for u in range(n_p):
        for v in adj[u]:
            if match_r[v] < 0:
                match_l[u] = v
                match_r[v] = u
                break

    while True:
        q = deque()
        for u in range(n_p):
            if match_l[u] < 0:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = -1
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w < 0:
                    found = True
                elif dist[w] < 0:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            break
        # iterative DFS along layered graph
        it = [0] * n_p
        for root in range(n_p):
            if match_l[root] >= 0:
                continue
            stack = [root]
            while stack:
                u = stack[-1]
                nbrs = adj[u]
                advanced = False
                while it[u] < len(nbrs):
                    v = nbrs[it[u]]
                    it[u] += 1
                    w = match_r[v]
                    if w < 0:
                        # augment along the stack
                        for x in reversed(stack):
                            prev = match_l[x]
                            match_l[x] = v
                            match_r[v] = x
                            v = prev
                        stack.clear()
                        advanced = True
                        break
                    if dist[w] == dist[u] + 1:
                        stack.append(w)
                        advanced = True
                        break
                if not advanced:
                    dist[u] = -1
                    stack.pop()
    return Matching.of((u, v) for u, v in enumerate(match_l) if v >= 0)


def brute_force_max_matching(g: BipartiteGraph) -> int:
    """Maximum matching size by exhaustive search over left-vertex choices."""
    if g.n_p > 10:
        raise ValueError("brute force is limited to n_p <= 10")
    adj = g.adj
    n_p = g.n_p

    @lru_cache(maxsize=None)
    def best(u: int, used: int) -> int:
        # used is a bitmask of taken right vertices
        if u == n_p:
            return 0
        result = best(u + 1, used)
        for v in adj[u]:
            if not used >> v & 1:
                result = max(result, 1 + best(u + 1, used | 1 << v))
        return result

    return best(0, 0)


def round_on_support(a: Allocation, k: int, g: BipartiteGraph) -> Matching:
    """Integral matching inside the support of ``a``.

    The scaled allocation is a fractional matching on the support, so by
    integrality of the bipartite matching polytope a maximum matching of the
    support is at least as large as its value.
    """
    sub = g.subgraph(a.flow.keys())
    return hopcroft_karp(sub)


@dataclass
class FlowNetwork:
    """Directed network with integer capacities, solved by Dinic's algorithm."""

    source: Hashable
    sink: Hashable
    _index: dict = field(default_factory=dict, repr=False)
    _head: list = field(default_factory=list, repr=False)
    _to: list = field(default_factory=list, repr=False)
    _cap: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._node(self.source)
        self._node(self.sink)

    def _node(self, x: Hashable) -> int:
        i = self._index.get(x)
        if i is None:
            i = self._index[x] = len(self._head)
            self._head.append([])
        return i

    def add_arc(self, x: Hashable, y: Hashable, capacity: int) -> None:
        if capacity < 0:
            raise ValueError("capacity must be nonnegative")
        if y == self.source or x == self.sink:
            raise ValueError("no arcs into the source or out of the sink")
        i, j = self._node(x), self._node(y)
        self._head[i].append(len(self._to))
        self._to.append(j)
        self._cap.append(capacity)
        self._head[j].append(len(self._to))
        self._to.append(i)
        self._cap.append(0)

    def max_flow(self) -> int:
        s, t = self._index[self.source], self._index[self.sink]
        head, to, cap = self._head, self._to, self._cap
        n = len(head)
        total = 0
        while True:
            level = [-1] * n
            level[s] = 0
            q = deque([s])
            while q:
                x = q.popleft()
                for e in head[x]:
                    if cap[e] > 0 and level[to[e]] < 0:
                        level[to[e]] = level[x] + 1
                        q.append(to[e])
            if level[t] < 0:
                return total
            it = [0] * n
            while True:
                pushed = self._augment(s, t, level, it)
                if not pushed:
                    break
                total += pushed

    def _augment(self, s: int, t: int, level: list[int], it: list[int]) -> int:
        head, to, cap = self._head, self._to, self._cap
        stack: list[int] = []  # arc ids on the current path
        x = s
        while True:
            if x == t:
                pushed = min(cap[e] for e in stack)
                for e in stack:
                    cap[e] -= pushed
                    cap[e ^ 1] += pushed
                return pushed
            arcs = head[x]
            while it[x] < len(arcs):
                e = arcs[it[x]]
                if cap[e] > 0 and level[to[e]] == level[x] + 1:
                    break
                it[x] += 1
            else:
                if x == s:
                    return 0
                level[x] = -1
                e = stack.pop()
                x = to[e ^ 1]
                it[x] += 1
                continue
            stack.append(e)
            x = to[e]


def budgeted_feasibility(
    support: Mapping[Hashable, Iterable[Hashable]] | Iterable[tuple[Hashable, Hashable]],
    budgets: Mapping[Hashable, int] | Sequence[int],
) -> bool:
    """True iff each advertiser ``a`` can take exactly ``budgets[a]`` distinct impressions.

    ``support`` is either an adjacency mapping advertiser -> impressions or
    an iterable of ``(advertiser, impression)`` edges.
    """
    if not isinstance(budgets, Mapping):
        budgets = dict(enumerate(budgets))
    if any(b < 0 for b in budgets.values()):
        raise ValueError("budgets must be nonnegative")
    if isinstance(support, Mapping):
        edges = [(a, i) for a, imps in support.items() for i in imps]
    else:
        edges = list(support)
    need = sum(budgets.values())
    if need == 0:
        return True
    net = FlowNetwork(("s",), ("t",))
    for a, b in budgets.items():
        if b:
            net.add_arc(("s",), ("a", a), b)
    impressions = set()
    for a, i in edges:
        if budgets.get(a, 0):
            net.add_arc(("a", a), ("i", i), 1)
            impressions.add(i)
    for i in impressions:
        net.add_arc(("i", i), ("t",), 1)
    return net.max_flow() == need
