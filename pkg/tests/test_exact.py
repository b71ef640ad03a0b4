import itertools
import math

import numpy as np
import pytest

from conftest import random_graph
from oracles import max_matching_nx
from streammatch.exact import (
    FlowNetwork,
    brute_force_max_matching,
    budgeted_feasibility,
    hopcroft_karp,
    round_on_support,
)
from streammatch.graph import ArrivalStream, BipartiteGraph, validate_matching
from streammatch.waterfill import PassConfig, matching_value, run_multipass


def test_hopcroft_karp_small_cases():
    assert len(hopcroft_karp(BipartiteGraph(0, 0, ()))) == 0
    assert len(hopcroft_karp(BipartiteGraph(2, 2, ((0, 1), (0,))))) == 2
    # augmenting path needed after greedy picks u0-v0
    g = BipartiteGraph(3, 3, ((0, 1), (0,), (1, 2)))
    m = hopcroft_karp(g)
    assert len(m) == 3 and validate_matching(g, m)


def test_hopcroft_karp_against_networkx(rng):
    for _ in range(200):
        g = random_graph(rng, 25, 25)
        m = hopcroft_karp(g)
        assert validate_matching(g, m)
        assert len(m) == max_matching_nx(g.n_p, g.adj)


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_max_matching(BipartiteGraph(11, 1, ((),) * 11))


def test_round_on_support_dominates_fractional(rng):
    for _ in range(40):
        g = random_graph(rng, 15, 15)
        s = ArrivalStream(g, tuple(rng.permutation(g.n_p).tolist()))
        for k in (1, 3):
            a = run_multipass(s, PassConfig(passes=k))
            m = round_on_support(a, k, g)
            assert validate_matching(g, m)
            assert all((u, v) in a.flow for u, v in m.pairs)
            assert len(m) >= math.ceil(matching_value(a, k) - 1e-6)


def test_flow_network_basics():
    net = FlowNetwork("s", "t")
    net.add_arc("s", "a", 3)
    net.add_arc("a", "b", 2)
    net.add_arc("a", "t", 1)
    net.add_arc("b", "t", 5)
    assert net.max_flow() == 3
    with pytest.raises(ValueError):
        net.add_arc("a", "s", 1)
    with pytest.raises(ValueError):
        net.add_arc("t", "a", 1)
    with pytest.raises(ValueError):
        net.add_arc("a", "b", -1)


def _feasible_by_expansion(adj: dict, budgets: dict) -> bool:
    copies = [(a, j) for a, b in budgets.items() for j in range(b)]
    imps = sorted({i for a in adj for i in adj[a]})
    index = {i: n for n, i in enumerate(imps)}
    g = BipartiteGraph(len(copies), len(imps), tuple(tuple(sorted(index[i] for i in adj.get(a, ()))) for a, _ in copies))
    return len(hopcroft_karp(g)) == len(copies)


def test_budgeted_feasibility_against_expansion():
    rng = np.random.Generator(np.random.PCG64(3))
    for _ in range(300):
        n_a, n_i = int(rng.integers(1, 5)), int(rng.integers(1, 9))
        adj = {a: [int(i) for i in np.flatnonzero(rng.random(n_i) < 0.4)] for a in range(n_a)}
        budgets = {a: int(rng.integers(0, 4)) for a in range(n_a)}
        assert budgeted_feasibility(adj, budgets) == _feasible_by_expansion(adj, budgets)
        edges = [(a, i) for a in adj for i in adj[a]]
        assert budgeted_feasibility(edges, [budgets[a] for a in range(n_a)]) == _feasible_by_expansion(adj, budgets)


def test_budgeted_feasibility_edge_cases():
    assert budgeted_feasibility({}, {})
    assert budgeted_feasibility({0: [1]}, {0: 0})
    assert not budgeted_feasibility({0: [1, 2]}, {0: 3})
    with pytest.raises(ValueError):
        budgeted_feasibility({0: [1]}, {0: -1})


def test_brute_force_exhaustive_tiny():
    # every bipartite graph on 3 + 3 vertices with up to 4 edges
    all_edges = list(itertools.product(range(3), range(3)))
    for r in range(5):
        for edges in itertools.combinations(all_edges, r):
            g = BipartiteGraph.from_edges(3, 3, edges)
            assert brute_force_max_matching(g) == len(hopcroft_karp(g))
