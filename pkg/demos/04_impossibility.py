"""Without enough connectivity the outputs cannot collapse below dimension s + 1.

s + 2 processes never hear from anybody, so they keep their inputs (unit
vectors and the origin) forever. Those inputs span an (s + 1)-dimensional
affine space, and every other process only averages towards them.
"""

from subspace_consensus.analysis import estimate_limit_subspace, verify_impossibility
from subspace_consensus.graph import root_report
from subspace_consensus.adversary import imposs_graph

for s in (0, 1, 2):
    n = s + 3
    g = imposs_graph(n, s + 1)
    rep = verify_impossibility(n, s, rounds=100)
    trace = rep.info["trace"]
    print(f"s={s}, n={n}: {root_report(g).source_scc_count} source components")
    print("  final outputs:")
    for i, x in enumerate(trace.states[-1]):
        print(f"    {i}: {x.round(4).tolist()}")
    print(f"  limit dimension estimate: {estimate_limit_subspace(trace, 20).dim}")
    print(" ", rep.summary())
