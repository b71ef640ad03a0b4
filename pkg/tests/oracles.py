"""Reference implementations that share no code with the package."""

from __future__ import annotations

import itertools
from fractions import Fraction

import networkx as nx


def pour_by_raising(levels: list[Fraction], amount: Fraction) -> list[Fraction]:
    """Raise the lowest group of levels step by step until ``amount`` is spent."""
    new = list(levels)
    left = Fraction(amount)
    while left > 0:
        low = min(new)
        group = [i for i, x in enumerate(new) if x == low]
        higher = [x for x in new if x > low]
        room = (min(higher) - low) * len(group) if higher else None
        if room is None or room >= left:
            rise = left / len(group)
            for i in group:
                new[i] += rise
            left = Fraction(0)
        else:
            for i in group:
                new[i] = min(higher)
            left -= room
    return new


def loads_after(adj, order, k: int) -> list[Fraction]:
    """Right-vertex loads after ``k`` passes, by direct simulation in exact arithmetic."""
    n_q = 1 + max((v for nb in adj for v in nb), default=-1)
    load = [Fraction(0)] * n_q
    for _ in range(k):
        for u in order:
            nb = list(adj[u])
            if not nb:
                continue
            raised = pour_by_raising([load[v] for v in nb], Fraction(1))
            for v, x in zip(nb, raised):
                load[v] = x
    return load


def support_is_forest(edges) -> bool:
    g = nx.Graph()
    g.add_edges_from((("u", u), ("v", v)) for u, v in edges)
    return g.number_of_edges() == 0 or nx.is_forest(g)


def max_matching_nx(n_p: int, adj) -> int:
    g = nx.Graph()
    left = [("u", u) for u in range(n_p)]
    g.add_nodes_from(left)
    g.add_edges_from((("u", u), ("v", v)) for u in range(n_p) for v in adj[u])
    return len(nx.bipartite.maximum_matching(g, top_nodes=left)) // 2


def min_ratio_subsets(adj, members, allowed):
    """All subsets of ``members`` minimizing |N(S) & allowed| / |S|, with that ratio."""
    best = None
    found = []
    for r in range(1, len(members) + 1):
        for s in itertools.combinations(members, r):
            nb = set().union(*(set(adj[u]) for u in s)) & allowed
            ratio = Fraction(len(nb), r)
            if best is None or ratio < best:
                best, found = ratio, [frozenset(s)]
            elif ratio == best:
                found.append(frozenset(s))
    return best, found
