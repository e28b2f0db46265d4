"""Rooted versus broadcastable graphs, and how relaying closes the gap.

A graph is k-rooted when at most k processes together reach everyone, and
k-broadcastable when at most k processes reach everyone in a single hop.
Composing enough rooted rounds (message relaying) turns the first property
into the second.
"""

import numpy as np

from subspace_consensus import (
    broadcast_report,
    compose_all,
    default_relay_rounds,
    make_graph,
    root_report,
)
from subspace_consensus.adversary import sample_k_rooted
from subspace_consensus.analysis import verify_product_reduction

# A directed path reaches everyone from process 0 but needs three one-hop broadcasters.
path = make_graph(5, [(i, i + 1) for i in range(4)])
print("path 0->1->2->3->4")
print("  source components:", root_report(path).source_scc_count)
rep = broadcast_report(path)
print("  smallest one-hop broadcasting set:", rep.witness)

# Composing the path with itself shortens every relay chain.
for length in (1, 2, 4):
    prod = compose_all([path] * length)
    print(f"  product of {length} copies -> broadcasting set {broadcast_report(prod).witness}")

# Random 1-rooted graphs on 5 processes, composed over the relay length.
rng = np.random.default_rng(3)
n, k = 5, 1
length = default_relay_rounds(n)
graphs = [sample_k_rooted(n, k, rng) for _ in range(length)]
print(f"\n{length} random {k}-rooted graphs on {n} processes")
print("  broadcasting-set size of each round:", [broadcast_report(g).min_size for g in graphs])
print("  broadcasting-set size of the product:", broadcast_report(compose_all(graphs)).min_size)

rep = verify_product_reduction(n, k, trials=300)
print("\n300 random products:", rep.summary())
