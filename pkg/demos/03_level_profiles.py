"""
Level profiles after k passes
=============================

b(x) counts right vertices with load at least x.  On a graph with a
perfect matching M, its running integral stays above |M| times the running
integral of the Gamma tail F^k.
"""

import numpy as np

from streammatch import LevelProfile, PassConfig, run_multipass
from streammatch.analysis import head_integral, profile_bound_table
from streammatch.generators import gen_planted

n = 150
s = gen_planted(n, 0.05, seed=7)

for k in (1, 3, 5):
    a = run_multipass(s, PassConfig(passes=k))
    p = LevelProfile.from_allocation(a, n, k)
    grid = np.linspace(0, 2 * k, 9)
    print(f"\nk={k}: loads range [{p.loads.min():.3f}, {p.loads.max():.3f}], total {p.total():.1f}")
    print(f"{'x':>6s} {'b(x)':>5s} {'int b':>9s} {'n int F^k':>10s}")
    for x, lhs, rhs, ok in profile_bound_table(p, n, grid):
        print(f"{x:6.2f} {p.b(x):5d} {lhs:9.3f} {rhs:10.3f} {'' if ok else 'VIOLATED'}")

# the whole bound at x = infinity is n * k, matched by total water
print("\nn * int_0^inf F^5 =", n * head_integral(5, 1e6))
