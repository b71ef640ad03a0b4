"""
Gap-Existence on a million impressions
======================================

Twenty advertisers with interval neighborhoods over 10^6 impressions.  The
solver only ever materializes impressions handed out by the oracle, so the
active set stays in the hundreds.
"""

import time

from streammatch.analysis import choose_pass_count
from streammatch.gap import CountingOracle, GapInstance, gap_decide
from streammatch.generators import gen_lopsided_interval

eps = 0.2
print("passes chosen for sum of budgets 60:", choose_pass_count(eps, 10**6, 60))

for planted in ("yes", "no"):
    base = gen_lopsided_interval(20, 10**6, 5, seed=3, planted=planted, total_budget=60, eps=eps)
    oracle = CountingOracle(base.oracle)
    inst = GapInstance(base.budgets, base.n_i, oracle, eps)
    t0 = time.perf_counter()
    res = gap_decide(inst, eps)
    st = res.state
    print(f"\nplanted {planted.upper()}: answer {res.answer} in {time.perf_counter() - t0:.1f}s")
    print(f"  peak |I*| = {st.peak_active}  (5 * sum(B) / eps = {5 * 60 / eps:.0f})")
    print(f"  new_neighbor calls {oracle.new_calls}, list_neighbors calls {oracle.list_calls}")
    print(f"  support edges (advertiser level) {len(st.support_edges())}")
    if planted == "no":
        print(f"  squeezed advertisers {base.meta['squeezed']}")
