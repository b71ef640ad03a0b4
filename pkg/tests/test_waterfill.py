from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import loads_after, pour_by_raising, support_is_forest
from streammatch.graph import ArrivalStream, BipartiteGraph
from streammatch.waterfill import (
    Allocation,
    PassConfig,
    matching_value,
    pour_level,
    process_vertex,
    remove_cycles,
    run_multipass,
    to_fractional_matching,
    water_fill,
)

HAND = ArrivalStream(BipartiteGraph(2, 2, ((0, 1), (0,))), (0, 1))


def alloc_from_flows(flows: dict, exact: bool = False) -> Allocation:
    a = Allocation(exact=exact)
    for (u, v), f in flows.items():
        a.add_flow(u, v, f)
    return a


def out_totals(a: Allocation) -> dict:
    tot: dict = {}
    for (u, _), f in a.flow.items():
        tot[u] = tot.get(u, 0) + f
    return tot


def in_totals(a: Allocation) -> dict:
    tot: dict = {}
    for (_, v), f in a.flow.items():
        tot[v] = tot.get(v, 0) + f
    return tot


# --- pouring -----------------------------------------------------------------


@pytest.mark.parametrize(
    "levels, amount, level",
    [([0.0, 0.0], 1.0, 0.5), ([0.2, 0.8], 1.0, 1.0), ([0.5], 1.0, 1.5), ([3.0, 0.0, 0.0], 1.0, 0.5)],
)
def test_pour_level(levels, amount, level):
    assert pour_level(levels, amount) == pytest.approx(level, abs=1e-12)


def test_pour_level_rejects_empty():
    with pytest.raises(ValueError):
        pour_level([], 1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.fractions(0, 5, max_denominator=12), min_size=1, max_size=8))
def test_pour_level_matches_raising(levels):
    t = pour_level(levels, Fraction(1))
    assert sum(max(Fraction(0), t - x) for x in levels) == 1
    raised = pour_by_raising(levels, Fraction(1))
    assert raised == [max(t, x) for x in levels]


def test_water_fill_split_and_partial():
    a = Allocation()
    water_fill(a, 0, [0, 1])
    assert a.flow == {(0, 0): 0.5, (0, 1): 0.5}
    a = alloc_from_flows({(9, 0): 0.2, (9, 1): 0.8})
    water_fill(a, 0, [0, 1])
    assert a.flow[(0, 0)] == pytest.approx(0.8)
    assert a.flow[(0, 1)] == pytest.approx(0.2)
    assert a.load[0] == pytest.approx(1.0) and a.load[1] == pytest.approx(1.0)


def test_water_fill_skips_vertices_above_level():
    a = alloc_from_flows({(9, 0): 0.5, (9, 1): 0.5})
    water_fill(a, 1, [0])
    assert a.load[0] == 1.5 and (1, 1) not in a.flow


def test_process_vertex_examples():
    cfg = PassConfig()
    a = process_vertex(Allocation(), 0, [3], cfg)
    assert a.cap[0] == 1 and a.flow == {(0, 3): 1.0} and a.load[3] == 1.0
    process_vertex(a, 0, [3], cfg)
    assert a.cap[0] == 2 and a.flow[(0, 3)] == 2.0
    before = dict(a.flow)
    process_vertex(a, 1, [], cfg)
    assert a.cap[1] == 1 and a.flow == before and a.withheld == 1


def test_pass_config_validation():
    with pytest.raises(ValueError):
        PassConfig(passes=0)
    with pytest.raises(ValueError):
        PassConfig(tolerance=0)
    with pytest.raises(ValueError):
        PassConfig(cycle_buffer_edges=-1)


# --- cycle removal -----------------------------------------------------------


def test_remove_cycles_identity_on_forest():
    a = alloc_from_flows({(0, 0): 0.5, (0, 1): 0.5, (1, 1): 1.0})
    before = dict(a.flow)
    remove_cycles(a)
    assert a.flow == before


def test_remove_cycles_four_cycle():
    a = alloc_from_flows({(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5}, exact=False)
    remove_cycles(a)
    assert len(a.flow) == 3 or len(a.flow) == 2
    assert support_is_forest(a.flow)
    assert out_totals(a) == {0: 1.0, 1: 1.0}
    assert in_totals(a) == {0: 1.0, 1: 1.0}
    assert sorted(a.flow.values()) in ([1.0, 1.0], [0.5, 0.5, 1.0])


def test_remove_cycles_two_disjoint_cycles():
    flows = {}
    for base in (0, 2):
        for u in (base, base + 1):
            for v in (base, base + 1):
                flows[(u, v)] = Fraction(1, 2) if u == base else Fraction(1, 3)
    a = alloc_from_flows(flows, exact=True)
    remove_cycles(a)
    assert len(a.flow) <= len(flows) - 2
    assert support_is_forest(a.flow)
    assert out_totals(a) == {0: 1, 1: Fraction(2, 3), 2: 1, 3: Fraction(2, 3)}
    assert in_totals(a) == {v: Fraction(5, 6) for v in range(4)}


@st.composite
def flow_maps(draw):
    n_p = draw(st.integers(1, 6))
    n_q = draw(st.integers(1, 6))
    edges = draw(st.sets(st.tuples(st.integers(0, n_p - 1), st.integers(0, n_q - 1)), min_size=1, max_size=n_p * n_q))
    amounts = draw(st.lists(st.fractions(Fraction(1, 20), 3, max_denominator=20), min_size=len(edges), max_size=len(edges)))
    return dict(zip(sorted(edges), amounts))


@settings(max_examples=200, deadline=None)
@given(flow_maps())
def test_remove_cycles_preserves_vertex_totals(flows):
    a = alloc_from_flows(flows, exact=True)
    outs, ins = out_totals(a), in_totals(a)
    remove_cycles(a)
    assert support_is_forest(a.flow)
    assert all(f > 0 for f in a.flow.values())
    assert out_totals(a) == outs
    assert in_totals(a) == ins


# --- multipass runs ----------------------------------------------------------


def test_single_edge():
    s = ArrivalStream(BipartiteGraph(1, 1, ((0,),)), (0,))
    a = run_multipass(s, PassConfig(passes=1))
    assert a.flow == {(0, 0): 1.0}


def test_hand_example_one_pass():
    a = run_multipass(HAND, PassConfig(passes=1, exact=True))
    assert a.loads(2) == [Fraction(3, 2), Fraction(1, 2)]
    assert matching_value(a, 1) == Fraction(3, 2)
    x = to_fractional_matching(a, 1)
    assert x == {(0, 0): Fraction(1, 3), (0, 1): Fraction(1, 2), (1, 0): Fraction(2, 3)}
    assert sum(f for (_, v), f in x.items() if v == 0) == 1
    assert sum(f for (_, v), f in x.items() if v == 1) == Fraction(1, 2)


def test_hand_example_two_passes():
    a = run_multipass(HAND, PassConfig(passes=2, exact=True))
    assert a.total_water() == 4
    # second-pass pour by u0 lifts v1 from 1/2 to 3/2; u1 then adds a unit to v0
    assert a.loads(2) == [Fraction(5, 2), Fraction(3, 2)]
    assert matching_value(a, 2) == Fraction(7, 4)


def test_matching_value_edge_cases():
    assert matching_value(Allocation(), 3) == 0
    a = alloc_from_flows({(0, 0): 3.0, (1, 1): 3.0, (2, 2): 3.0})
    assert matching_value(a, 3) == 3


def test_fractional_matching_without_overload_is_division():
    a = alloc_from_flows({(0, 0): 1.0, (1, 1): 0.5, (1, 0): 0.5})
    assert to_fractional_matching(a, 2) == {(0, 0): 0.5, (1, 1): 0.25, (1, 0): 0.25}
    assert to_fractional_matching(alloc_from_flows({(0, 0): 4.0}), 4) == {(0, 0): 1.0}


@st.composite
def small_streams(draw):
    n_p = draw(st.integers(1, 7))
    n_q = draw(st.integers(1, 7))
    adj = tuple(tuple(sorted(draw(st.sets(st.integers(0, n_q - 1), max_size=n_q)))) for _ in range(n_p))
    order = tuple(draw(st.permutations(range(n_p))))
    return ArrivalStream(BipartiteGraph(n_p, n_q, adj), order)


@settings(max_examples=120, deadline=None)
@given(small_streams(), st.integers(1, 4), st.sampled_from([0, 2, 5]))
def test_run_invariants(s, k, buffer):
    g = s.graph
    live = sum(1 for nb in g.adj if nb)
    cfg = PassConfig(passes=k, exact=True, cycle_buffer_edges=buffer)
    seen = []

    def check(j, a):
        assert a.total_water() == j * live
        assert support_is_forest(a.flow)
        assert len(a.flow) <= g.n_p + g.n_q - 1
        for u in range(g.n_p):
            assert a.cap[u] == j
            if g.adj[u]:
                assert a.out[u] == j
        assert out_totals(a) == {u: j for u in range(g.n_p) if g.adj[u]}
        assert in_totals(a) == {v: x for v, x in a.load.items() if x > 0}
        seen.append(j)

    a = run_multipass(s, cfg, on_pass=check)
    assert seen == list(range(1, k + 1))
    oracle = loads_after(g.adj, s.order, k)
    assert [a.load.get(v, 0) for v in range(len(oracle))] == oracle
    x = to_fractional_matching(a, k)
    assert all(sum(f for (uu, _), f in x.items() if uu == u) <= 1 for u in range(g.n_p))
    assert all(sum(f for (_, vv), f in x.items() if vv == v) <= 1 for v in range(g.n_q))
    assert sum(x.values()) == matching_value(a, k)


@settings(max_examples=60, deadline=None)
@given(small_streams(), st.integers(1, 4))
def test_float_agrees_with_exact(s, k):
    fa = run_multipass(s, PassConfig(passes=k))
    ea = run_multipass(s, PassConfig(passes=k, exact=True))
    for v in range(s.graph.n_q):
        assert fa.load.get(v, 0.0) == pytest.approx(float(ea.load.get(v, 0)), abs=1e-9)
    assert float(matching_value(fa, k)) == pytest.approx(float(matching_value(ea, k)), abs=1e-9)


def test_loads_monotone_across_arrivals(rng):
    adj = tuple(tuple(int(v) for v in np.flatnonzero(rng.random(15) < 0.3)) for _ in range(15))
    a = Allocation()
    cfg = PassConfig()
    prev = [0.0] * 15
    for _ in range(4):
        for u in range(15):
            process_vertex(a, u, adj[u], cfg)
            cur = a.loads(15)
            assert all(c >= p - 1e-12 for c, p in zip(cur, prev))
            prev = cur


def test_determinism(rng):
    adj = tuple(tuple(int(v) for v in np.flatnonzero(rng.random(30) < 0.2)) for _ in range(30))
    s = ArrivalStream(BipartiteGraph(30, 30, adj), tuple(range(30)))
    a1 = run_multipass(s, PassConfig(passes=3))
    a2 = run_multipass(s, PassConfig(passes=3))
    assert a1.flow == a2.flow and a1.load == a2.load


def test_value_nondecreasing_in_k(rng):
    for _ in range(10):
        adj = tuple(tuple(int(v) for v in np.flatnonzero(rng.random(12) < 0.25)) for _ in range(12))
        s = ArrivalStream(BipartiteGraph(12, 12, adj), tuple(rng.permutation(12).tolist()))
        vals = []
        run_multipass(s, PassConfig(passes=6, exact=True), on_pass=lambda j, a: vals.append(matching_value(a, j)))
        assert all(b >= a for a, b in zip(vals, vals[1:]))
