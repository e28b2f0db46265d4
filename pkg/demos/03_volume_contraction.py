"""Hull volume shrinks by a factor 1 - alpha^d per round.

alpha is the least weight any process puts on the broadcasting set in that
round. Iterating the factor gives a round by which the volume is below any
target epsilon.
"""

import numpy as np

from subspace_consensus import AdversarySpec, WeightRule, run
from subspace_consensus.analysis import required_rounds, run_convergence_bound, verify_volume_contraction

spec = AdversarySpec(4, "random_broadcastable", k=2, seed=5)
x0 = np.random.default_rng(5).uniform(-5, 5, (4, 2))
trace = run(spec, WeightRule(), x0, 12)
rep = verify_volume_contraction(trace)
print("round  alpha    ratio     1 - alpha^2")
for t, ratio in rep.info["ratios"].items():
    a = trace.record(t).alpha
    print(f"{t:5d}  {a:.4f}  {ratio:.6f}  {1 - a ** 2:.6f}")
print(rep.summary())

for eps in (1e-2, 1e-4):
    rep = run_convergence_bound(spec, WeightRule(), x0, eps)
    info = rep.info
    print(f"\neps={eps:g}: alpha={info['alpha']:.3f}, vol0={info['vol0']:.2f}")
    print(f"  guaranteed by round {info['bound_round']}, reached at round {info['first_round']}")
    print(" ", rep.summary())

print("\nthe bound for alpha=1/2, d=1, vol0=1, eps=0.1:", required_rounds(0.5, 1, 1.0, 0.1), "rounds")
