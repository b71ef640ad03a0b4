"""
Water-filling on a two-by-two graph
===================================

Two left vertices arrive in order.  u0 sees both right vertices, u1 only
sees v0.  Every arrival pours one unit of water onto its least loaded
neighbors, and replaying the stream adds passes.
"""

from fractions import Fraction

from streammatch import ArrivalStream, BipartiteGraph, PassConfig, matching_value, run_multipass
from streammatch.waterfill import Allocation, pour_level, remove_cycles, to_fractional_matching

g = BipartiteGraph(2, 2, ((0, 1), (0,)))
stream = ArrivalStream(g, (0, 1))

# one pass, exact arithmetic so the numbers print as fractions
a = run_multipass(stream, PassConfig(passes=1, exact=True))
print("loads after one pass:", [str(x) for x in a.loads(2)])
print("value:", matching_value(a, 1), " optimum: 2")
print("scaled fractional matching:", {e: str(x) for e, x in to_fractional_matching(a, 1).items()})

# the pour level solves sum(max(0, t - l)) = 1
print("\npour level over loads (0.2, 0.8):", pour_level([0.2, 0.8], 1.0))

# more passes push the value toward the optimum
for k in (1, 2, 3, 5, 8):
    a = run_multipass(stream, PassConfig(passes=k, exact=True))
    print(f"k={k}: value {matching_value(a, k)} = {float(matching_value(a, k)):.4f}")

# a four-cycle in the support gets rerouted until one edge disappears
a = Allocation(exact=True)
for u in (0, 1):
    for v in (0, 1):
        a.add_flow(u, v, Fraction(1, 2))
print("\nbefore rerouting:", {e: str(f) for e, f in a.flow.items()})
remove_cycles(a)
print("after rerouting: ", {e: str(f) for e, f in a.flow.items()})
