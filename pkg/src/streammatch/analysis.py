"""Closed-form guarantees, level profiles and canonical decompositions.

``F^k(x) = sum_{i<k} e^{-x} x^i / i!`` is the upper tail of a Gamma(k, 1)
variable.  After ``k`` passes on a graph with a perfect matching ``M`` the
number ``b(x)`` of right vertices with load at least ``x`` satisfies
``int_0^x b >= |M| int_0^x F^k`` for every ``x``, which yields the
approximation factor ``1 - e^{-k} k^{k-1} / (k-1)!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .graph import BipartiteGraph
from .waterfill import Allocation

__all__ = [
    "gamma_tail",
    "tail_integral",
    "head_integral",
    "head_integral_quad",
    "tail_integral_quad",
    "guarantee",
    "tail_bound",
    "choose_pass_count",
    "LevelProfile",
    "default_grid",
    "profile_bound_table",
    "check_profile_bound",
    "Block",
    "CanonicalDecomposition",
    "canonical_decomposition",
    "verify_decomposition",
]


def _log_poisson_terms(k: int, x: float) -> np.ndarray:
    """``log(e^{-x} x^i / i!)`` for ``i = 0..k-1``, via the ratio recurrence."""
    i = np.arange(1, k)
    steps = math.log(x) - np.log(i)
    return -x + np.concatenate(([0.0], np.cumsum(steps)))


def _logsumexp(a: np.ndarray) -> float:
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


def gamma_tail(k: int, x: float) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 1.0
    return math.exp(min(0.0, _logsumexp(_log_poisson_terms(k, x))))


def tail_integral(k: int, x: float) -> float:
    """``int_x^inf F^k(s) ds = sum_{i<k} (k - i) e^{-x} x^i / i!``."""
    if x == 0:
        return float(k)
    logs = _log_poisson_terms(k, x) + np.log(np.arange(k, 0, -1))
    return math.exp(_logsumexp(logs))


def head_integral(k: int, x: float) -> float:
    """``int_0^x F^k(s) ds``."""
    return k - tail_integral(k, x)


def head_integral_quad(k: int, x: float) -> float:
    if x == 0:
        return 0.0
    val, _ = integrate.quad(lambda s: gamma_tail(k, s), 0.0, x, epsabs=0.0, epsrel=1e-10, limit=500)
    return val


def tail_integral_quad(k: int, x: float) -> float:
    # split at the bulk of the mass so the infinite tail is smooth for quad
    mid = max(x, 4.0 * k + 40.0)
    head = 0.0
    if mid > x:
        head, _ = integrate.quad(lambda s: gamma_tail(k, s), x, mid, epsabs=0.0, epsrel=1e-11, limit=500)
    tail, _ = integrate.quad(lambda s: gamma_tail(k, s), mid, np.inf, epsabs=1e-14, epsrel=1e-11, limit=500)
    return head + tail


def _log_tail_term(k: int) -> float:
    # log(e^{-k} k^{k-1} / (k-1)!)
    return -k + (k - 1) * math.log(k) - math.lgamma(k)


def guarantee(k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return -math.expm1(_log_tail_term(k))


def tail_bound(k: int, eps_star: float) -> float:
    """Upper bound on ``(1/k) int_{k(1+eps*)}^inf F^k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps_star < 0:
        raise ValueError("eps_star must be >= 0")
    return math.exp(-eps_star * k + k * math.log1p(eps_star) + _log_tail_term(k))


def choose_pass_count(eps: float, n_i: int, sum_budgets: int) -> int:
    """Smallest ``k`` with ``tail_bound(k, eps*) <= sum_budgets**-2``.

    ``eps* = (1 - eps/4) / (1 - eps/2) - 1``.  The exact criterion does not
    depend on ``n_i``; it is accepted (and validated) so callers can pass the
    whole instance shape.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if n_i < 1 or sum_budgets < 1:
        raise ValueError("n_i and sum_budgets must be >= 1")
    eps_star = (1 - eps / 4) / (1 - eps / 2) - 1
    target = float(sum_budgets) ** -2
    k = 1
    while tail_bound(k, eps_star) > target:
        k += 1
    return k


@dataclass(frozen=True)
class LevelProfile:
    loads: np.ndarray  # sorted ascending
    k: int

    @classmethod
    def from_loads(cls, loads: Iterable[float], k: int) -> LevelProfile:
        arr = np.sort(np.asarray([float(x) for x in loads], dtype=float))
        arr.setflags(write=False)
        return cls(arr, k)

    @classmethod
    def from_allocation(cls, a: Allocation, n_q: int, k: int) -> LevelProfile:
        return cls.from_loads(a.loads(n_q), k)

    def b(self, x: float) -> int:
        """Number of right vertices with load at least ``x``."""
        return int(self.loads.size - np.searchsorted(self.loads, x, side="left"))

    def integral(self, x: float) -> float:
        """``int_0^x b(s) ds = sum_v min(load_v, x)``, exact for the step function."""
        return float(np.minimum(self.loads, x).sum())

    def total(self) -> float:
        return float(self.loads.sum())


def default_grid(p: LevelProfile, points: int = 50) -> list[float]:
    """Evenly spaced points on ``[0, 3k]`` plus every distinct load value."""
    grid = set(np.linspace(0.0, 3.0 * p.k, points).tolist())
    grid.update(np.unique(p.loads).tolist())
    return sorted(grid)


def profile_bound_table(
    p: LevelProfile, m_opt: int, grid: Sequence[float], method: str = "closed"
) -> list[tuple[float, float, float, bool]]:
    """Rows ``(x, int_0^x b, m_opt int_0^x F^k, holds)`` for each grid point."""
    if method == "closed":
        head = head_integral
    elif method == "quad":
        head = head_integral_quad
    else:
        raise ValueError(f"unknown method {method!r}")
    slack = 1e-6 * m_opt
    rows = []
    for x in grid:
        lhs = p.integral(x)
        rhs = m_opt * head(p.k, x)
        rows.append((float(x), lhs, rhs, lhs >= rhs - slack))
    return rows


def check_profile_bound(p: LevelProfile, m_opt: int, grid: Sequence[float], method: str = "closed") -> bool:
    return all(row[3] for row in profile_bound_table(p, m_opt, grid, method))


# ---------------------------------------------------------------------------
# canonical decomposition


@dataclass(frozen=True)
class Block:
    index: int
    left: frozenset[int]
    right: frozenset[int]
    alpha: Fraction | float  # math.inf for a block with no left vertices


@dataclass(frozen=True)
class CanonicalDecomposition:
    blocks: tuple[Block, ...]


def _masks(g: BipartiteGraph) -> list[int]:
    return [sum(1 << v for v in nbrs) for nbrs in g.adj]


def _subset_stats(nb: Sequence[int], members: Sequence[int], restrict: int, n_q: int):
    """For every nonempty subset of ``members``: (bitmask over members, size, |N(S) & restrict|)."""
    r = len(members)
    if n_q <= 64:
        gam = np.zeros(1 << r, dtype=np.uint64)
        for j, u in enumerate(members):
            gam[1 << j : 2 << j] = gam[: 1 << j] | np.uint64(nb[u] & restrict)
        idx = np.arange(1 << r, dtype=np.uint64)
        sizes = np.bitwise_count(idx).astype(np.int64)
        counts = np.bitwise_count(gam).astype(np.int64)
        return idx[1:], sizes[1:], counts[1:]
    gam_list = [0] * (1 << r)
    for j, u in enumerate(members):
        m = nb[u] & restrict
        for s in range(1 << j):
            gam_list[(1 << j) | s] = gam_list[s] | m
    idx = np.arange(1 << r, dtype=np.int64)
    sizes = np.array([int(s).bit_count() for s in range(1 << r)], dtype=np.int64)
    counts = np.array([g.bit_count() for g in gam_list], dtype=np.int64)
    return idx[1:], sizes[1:], counts[1:]


def canonical_decomposition(g: BipartiteGraph) -> CanonicalDecomposition:
    """Blocks found by repeatedly extracting a minimum-expansion left subset.

    Ties on the ratio ``|N(S)|/|S|`` go to the larger subset, which makes the
    block ratios strictly increasing.  Left vertices with no neighbors form a
    leading block with ratio 0; right vertices never reached form a trailing
    block with no left vertices and ratio infinity.
    """
    if g.n_p > 20:
        raise ValueError(
            "canonical_decomposition enumerates subsets and is limited to n_p <= 20; "
            "use verify_decomposition to check a partition obtained elsewhere"
        )
    nb = _masks(g)
    rem_p = list(range(g.n_p))
    rem_q = (1 << g.n_q) - 1
    raw: list[tuple[frozenset[int], frozenset[int], Fraction | float]] = []
    while rem_p:
        idx, sizes, counts = _subset_stats(nb, rem_p, rem_q, g.n_q)
        ratio = counts / sizes
        best = np.flatnonzero(counts * sizes[np.argmin(ratio)] == counts[np.argmin(ratio)] * sizes)
        pick = int(best[np.argmax(sizes[best])])
        mask = int(idx[pick])
        s = [u for j, u in enumerate(rem_p) if mask >> j & 1]
        t_mask = 0
        for u in s:
            t_mask |= nb[u]
        t_mask &= rem_q
        t = [v for v in range(g.n_q) if t_mask >> v & 1]
        raw.append((frozenset(s), frozenset(t), Fraction(len(t), len(s))))
        rem_q &= ~t_mask
        chosen = set(s)
        rem_p = [u for u in rem_p if u not in chosen]
    if rem_q:
        raw.append((frozenset(), frozenset(v for v in range(g.n_q) if rem_q >> v & 1), math.inf))
    n_low = sum(1 for _, _, a in raw if a <= 1)
    blocks = tuple(Block(j - n_low + 1, s, t, a) for j, (s, t, a) in enumerate(raw))
    return CanonicalDecomposition(blocks)


def verify_decomposition(g: BipartiteGraph, d: CanonicalDecomposition) -> bool:
    """Exact check of the three canonical-partition properties (plus partition and index sign)."""
    blocks = sorted(d.blocks, key=lambda b: b.index)
    if len({b.index for b in blocks}) != len(blocks):
        return False
    all_left = [u for b in blocks for u in b.left]
    all_right = [v for b in blocks for v in b.right]
    if sorted(all_left) != list(range(g.n_p)) or sorted(all_right) != list(range(g.n_q)):
        return False
    nb = _masks(g)
    seen_left = 0
    seen_right = 0
    for b in blocks:
        if (b.alpha <= 1) != (b.index <= 0):
            return False
        # property 3
        if not b.left:
            if b.alpha != math.inf or not b.right:
                return False
        elif b.alpha == math.inf or Fraction(len(b.right)) != b.alpha * len(b.left):
            return False
        # property 1 on the prefix ending at this block
        t_mask = sum(1 << v for v in b.right)
        seen_right |= t_mask
        for u in b.left:
            seen_left |= nb[u]
        if seen_left & ~seen_right:
            return False
        # property 2
        if b.left:
            members = sorted(b.left)
            _, sizes, counts = _subset_stats(nb, members, t_mask, g.n_q)
            alpha = Fraction(b.alpha)
            if np.any(counts * alpha.denominator < alpha.numerator * sizes):
                return False
    return True
