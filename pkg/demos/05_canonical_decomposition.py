"""
Canonical decomposition of a small graph
========================================

Blocks come out in increasing expansion |T|/|S|.  Blocks with ratio at
most one get indices <= 0.
"""

from streammatch import BipartiteGraph, canonical_decomposition, verify_decomposition

g = BipartiteGraph(
    5,
    6,
    (
        (0,),  # u0 and u1 compete for v0
        (0,),
        (1, 2),
        (2, 3, 4),
        (4, 5),
    ),
)

d = canonical_decomposition(g)
for b in d.blocks:
    print(f"index {b.index:2d}  alpha {str(b.alpha):>4s}  S={sorted(b.left)}  T={sorted(b.right)}")
print("verified:", verify_decomposition(g, d))
