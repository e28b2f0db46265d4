"""Outputs settle on a point, a line or a plane depending on the adversary.

With k processes broadcasting to everyone every round, the outputs in R^3
converge onto an affine subspace of dimension at most k - 1. Here the
broadcasters never listen to anybody, so the bound is attained: the limit is
exactly the affine span of their inputs.
"""

import numpy as np

from subspace_consensus import AdversarySpec, WeightRule, make_graph, run
from subspace_consensus.analysis import estimate_limit_subspace, verify_thickness_contraction
from subspace_consensus.geometry import affine_dim, direction_projection, thickness

N, ROUNDS = 6, 120


def adversary(k: int, seed: int) -> AdversarySpec:
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(10):
        edges = [(int(rng.integers(0, k)), j) for j in range(k, N)]
        edges += [(i, j) for i in range(k, N) for j in range(k, N) if i != j and rng.random() < 0.3]
        graphs.append(make_graph(N, edges))
    return AdversarySpec(N, "explicit", k=k, graphs=tuple(graphs))


x0 = np.random.default_rng(0).uniform(-5, 5, (N, 3))
for k, shape in ((1, "a point"), (2, "a line"), (3, "a plane")):
    trace = run(adversary(k, seed=k), WeightRule(), x0, ROUNDS)
    est = estimate_limit_subspace(trace, window=20)
    proj = direction_projection(x0[:k])
    print(f"k={k}: limit is {shape}")
    print(f"  estimated dimension {est.dim}, residual {est.residual:.1e}")
    print(f"  affine dimension of the broadcasters' inputs: {affine_dim(x0[:k])}")
    for t in (0, 10, 40, ROUNDS):
        print(f"  t={t:3d}  thickness across the broadcaster directions {thickness(trace.states[t], proj):.3e}")
    print("  one-round thickness contraction:", verify_thickness_contraction(trace).summary())
