"""Seeded instance generators.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``; PCG64 is
a documented 128-bit-state permuted congruential generator, so a seed fully
determines the output of every generator here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .gap import GapInstance, NeighborOracle, interval_feasible
from .graph import ArrivalStream, BipartiteGraph

__all__ = [
    "GenSpec",
    "GenerationError",
    "rng_for",
    "gen_planted",
    "gen_upper_triangular",
    "gen_lopsided_interval",
    "gen_layered_adversarial",
    "generate",
]


class GenerationError(ValueError):
    pass


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_planted(n: int, extra_prob: float, seed: int) -> ArrivalStream:
    """Random perfect matching ``u -> sigma(u)`` plus i.i.d. extra edges."""
    if n < 1:
        raise GenerationError("n must be >= 1")
    if not 0.0 <= extra_prob <= 1.0:
        raise GenerationError("extra_prob must lie in [0, 1]")
    rng = rng_for(seed)
    sigma = rng.permutation(n)
    extra = rng.random((n, n)) < extra_prob
    extra[np.arange(n), sigma] = True
    adj = tuple(tuple(int(v) for v in np.flatnonzero(row)) for row in extra)
    g = BipartiteGraph(n, n, adj)
    meta = {"kind": "planted", "opt": n, "planted": [(u, int(sigma[u])) for u in range(n)]}
    return ArrivalStream(g, tuple(range(n)), meta)


def gen_upper_triangular(n: int) -> ArrivalStream:
    """``u_i ~ {v_i, ..., v_{n-1}}`` arriving in order ``u_0, ..., u_{n-1}``."""
    if n < 1:
        raise GenerationError("n must be >= 1")
    g = BipartiteGraph(n, n, tuple(tuple(range(i, n)) for i in range(n)))
    return ArrivalStream(g, tuple(range(n)), {"kind": "upper_triangular", "opt": n})


def gen_layered_adversarial(k: int, width: int, seed: int) -> ArrivalStream:
    """Phased stress instance with ``k + 1`` phases of ``width`` left vertices.

    Right vertices form ``k + 1`` blocks.  Phase ``p`` vertex ``j`` is matched
    to vertex ``j`` of block ``p`` and additionally sees each vertex of every
    later block with probability 1/2, so early phases spill water onto the
    blocks that later phases need.  The final phase only sees its reserved
    block.  Phases arrive in order, so the optimum is ``(k + 1) * width``.
    This borrows the phase structure of the single-pass hardness argument
    but makes no claim about the packing properties used there.
    """
    if k < 1 or width < 2:
        raise GenerationError("need k >= 1 and width >= 2")
    rng = rng_for(seed)
    n = (k + 1) * width
    adj = []
    for p in range(k + 1):
        later = np.arange((p + 1) * width, n)
        for j in range(width):
            keep = later[rng.random(later.size) < 0.5]
            adj.append(tuple([p * width + j, *(int(v) for v in keep)]))
    g = BipartiteGraph(n, n, tuple(adj))
    meta = {"kind": "layered_adversarial", "opt": n, "phases": k + 1, "width": width}
    return ArrivalStream(g, tuple(range(n)), meta)


def _random_budgets(rng: np.random.Generator, n_a: int, max_budget: int, total: int | None) -> list[int]:
    if total is None:
        return [int(b) for b in rng.integers(1, max_budget + 1, size=n_a)]
    if not n_a <= total <= n_a * max_budget:
        raise GenerationError(f"cannot split total budget {total} over {n_a} advertisers with cap {max_budget}")
    budgets = [1] * n_a
    for _ in range(total - n_a):
        room = [a for a in range(n_a) if budgets[a] < max_budget]
        budgets[room[int(rng.integers(len(room)))]] += 1
    return budgets


def _composition(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    """Uniform random split of ``total`` into ``parts`` nonnegative integers."""
    cuts = np.sort(rng.integers(0, total + 1, size=parts - 1))
    return [int(x) for x in np.diff(np.concatenate(([0], cuts, [total])))]


def gen_lopsided_interval(
    n_a: int,
    n_i: int,
    max_budget: int,
    seed: int,
    planted: str = "yes",
    total_budget: int | None = None,
    eps: float = 0.2,
    slack: int | None = None,
) -> GapInstance:
    """Advertisers with interval neighborhoods over ``range(n_i)``.

    ``planted="yes"`` gives every advertiser a private block of ``B_a``
    impressions inside its interval, so a complete matching exists.
    ``planted="no"`` then squeezes a cluster of advertisers into a common
    window one impression too small for their reduced budgets
    ``floor((1 - eps) B_a)``, so not even the reduced matching exists.
    """
    if n_a < 1 or n_i < 1 or max_budget < 1:
        raise GenerationError("n_a, n_i and max_budget must be >= 1")
    if planted not in ("yes", "no"):
        raise GenerationError("planted must be 'yes' or 'no'")
    rng = rng_for(seed)
    budgets = _random_budgets(rng, n_a, max_budget, total_budget)
    total = sum(budgets)
    if total > n_i:
        raise GenerationError(f"total budget {total} exceeds the {n_i} impressions")
    if slack is None:
        slack = max(1, n_i // n_a)
    gaps = _composition(rng, n_i - total, n_a + 1)
    intervals: list[tuple[int, int]] = [(0, 0)] * n_a
    pos = 0
    for j, a in enumerate(rng.permutation(n_a)):
        a = int(a)
        pos += gaps[j]
        lo = max(0, pos - int(rng.integers(0, slack + 1)))
        hi = min(n_i - 1, pos + budgets[a] - 1 + int(rng.integers(0, slack + 1)))
        intervals[a] = (lo, hi)
        pos += budgets[a]
    meta: dict[str, Any] = {"kind": "lopsided_interval", "planted": planted, "eps": eps}
    if planted == "no":
        reduced = [int(np.floor((1 - eps) * b)) for b in budgets]
        eligible = [a for a in range(n_a) if reduced[a] >= 1]
        if sum(reduced[a] for a in eligible) < 2:
            raise GenerationError("no advertiser set can be squeezed below its reduced budgets")
        order = [int(x) for x in rng.permutation(eligible)]
        cluster, need = [], 0
        target = int(rng.integers(2, 5))
        for a in order:
            cluster.append(a)
            need += reduced[a]
            if len(cluster) >= target and need >= 2:
                break
        width = need - 1
        lo = int(rng.integers(0, n_i - width + 1))
        for a in cluster:
            intervals[a] = (lo, lo + width - 1)
        meta["squeezed"] = sorted(cluster)
    oracle = NeighborOracle.from_intervals(intervals)
    inst = GapInstance(tuple(budgets), n_i, oracle, eps, meta)
    reduced = [int(np.floor((1 - eps) * b)) for b in budgets]
    ok_full = interval_feasible(intervals, budgets)
    ok_reduced = interval_feasible(intervals, reduced)
    if planted == "yes" and not ok_full:
        raise AssertionError("planted YES instance is infeasible")
    if planted == "no" and ok_reduced:
        raise AssertionError("planted strong-NO instance is feasible")
    return inst


@dataclass(frozen=True)
class GenSpec:
    """Generator kind, its size parameters, a seed and an arrival-order policy."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    order: str = "given"


def generate(spec: GenSpec) -> ArrivalStream | GapInstance:
    p = spec.params
    if spec.kind == "planted":
        out = gen_planted(int(p["n"]), float(p.get("extra_prob", 0.0)), spec.seed)
    elif spec.kind == "upper_triangular":
        out = gen_upper_triangular(int(p["n"]))
    elif spec.kind == "layered_adversarial":
        out = gen_layered_adversarial(int(p["k"]), int(p["width"]), spec.seed)
    elif spec.kind == "lopsided_interval":
        return gen_lopsided_interval(
            int(p["n_a"]),
            int(p["n_i"]),
            int(p["max_budget"]),
            spec.seed,
            planted=p.get("planted", "yes"),
            total_budget=None if p.get("total_budget") is None else int(p["total_budget"]),
            eps=float(p.get("eps", 0.2)),
        )
    else:
        raise GenerationError(f"unknown generator kind {spec.kind!r}")
    if spec.order != "given":
        out = out.reordered(spec.order, spec.seed)
    return out
