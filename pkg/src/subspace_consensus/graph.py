"""Communication graphs on a fixed process set.

Processes are numbered ``0 .. n-1``. An edge ``(i, j)`` means that process
``j`` receives the message of process ``i`` in the round; every process always
receives its own message, so self-loops are added on construction.

The adjacency matrix ``adj`` is stored with ``adj[i, j] == True`` iff ``(i, j)``
is an edge, which makes the product of two graphs a boolean matrix product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "CommGraph",
    "RootReport",
    "BroadcastReport",
    "make_graph",
    "from_adjacency",
    "identity_graph",
    "complete_graph",
    "star_graph",
    "cycle_graph",
    "compose",
    "compose_all",
    "reachable_from",
    "root_report",
    "broadcast_report",
    "is_k_rooted",
    "is_k_broadcastable",
    "MAX_BROADCAST_SEARCH_N",
]

# Exhaustive broadcasting-set search is exponential in n.
MAX_BROADCAST_SEARCH_N = 16


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Directed communication graph with mandatory self-loops."""

    adj: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 2:
            raise ValueError(f"need at least 2 processes, got n={adj.shape[0]}")
        np.fill_diagonal(adj, True)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        rows, cols = np.nonzero(self.adj)
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def in_neighbors(self, i: int) -> np.ndarray:
        """Indices ``j`` whose message process ``i`` receives."""
        return np.flatnonzero(self.adj[:, i])

    def in_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=0)

    def edge_list(self, self_loops: bool = False) -> list[tuple[int, int]]:
        return sorted(e for e in self.edges if self_loops or e[0] != e[1])

    def issubgraph(self, other: "CommGraph") -> bool:
        return self.n == other.n and not np.any(self.adj & ~other.adj)

    def __eq__(self, other):
        if not isinstance(other, CommGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self):
        return f"CommGraph(n={self.n}, edges={self.edge_list()})"


@dataclass(frozen=True)
class RootReport:
    source_scc_count: int
    root_witness: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class BroadcastReport:
    min_size: int
    witness: tuple[int, ...]


def make_graph(n: int, edges: Iterable[tuple[int, int]] = ()) -> CommGraph:
    """Build a graph on ``n`` processes from an edge list; self-loops are implied."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 processes, got n={n}")
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        adj[i, j] = True
    return CommGraph(adj)


def from_adjacency(adj) -> CommGraph:
    return CommGraph(np.asarray(adj, dtype=bool))


def identity_graph(n: int) -> CommGraph:
    return make_graph(n)


def complete_graph(n: int) -> CommGraph:
    return CommGraph(np.ones((n, n), dtype=bool))


def star_graph(n: int, center: int = 0) -> CommGraph:
    return make_graph(n, [(center, j) for j in range(n)])


def cycle_graph(n: int) -> CommGraph:
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def compose(g1: CommGraph, g2: CommGraph) -> CommGraph:
    """Product graph: ``(i, j)`` iff ``(i, u)`` in ``g1`` and ``(u, j)`` in ``g2`` for some ``u``."""
    if g1.n != g2.n:
        raise ValueError(f"cannot compose graphs on {g1.n} and {g2.n} processes")
    prod = g1.adj.astype(np.int64) @ g2.adj.astype(np.int64)
    return CommGraph(prod > 0)


def compose_all(graphs: Iterable[CommGraph]) -> CommGraph:
    graphs = list(graphs)
    if not graphs:
        raise ValueError("empty graph sequence")
    out = graphs[0]
    for g in graphs[1:]:
        out = compose(out, g)
    return out


def reachable_from(g: CommGraph, sources: Iterable[int]) -> np.ndarray:
    """Boolean mask of processes reachable from ``sources`` (BFS)."""
    seen = np.zeros(g.n, dtype=bool)
    frontier = list(sources)
    seen[frontier] = True
    while frontier:
        nxt = np.flatnonzero(g.adj[frontier].any(axis=0) & ~seen)
        seen[nxt] = True
        frontier = nxt.tolist()
    return seen


def root_report(g: CommGraph) -> RootReport:
    """Count source strongly connected components of ``g``.

    A graph is k-rooted iff it has at most k SCCs without incoming edges from
    other components. The witness holds the smallest process of each source
    component.
    """
    ncomp, labels = connected_components(g.adj, directed=True, connection="strong")
    # an edge u -> v between different components makes comp(v) non-source
    u, v = np.nonzero(g.adj)
    cross = labels[u] != labels[v]
    has_incoming = np.zeros(ncomp, dtype=bool)
    has_incoming[labels[v[cross]]] = True
    comps = []
    for c in range(ncomp):
        if not has_incoming[c]:
            comps.append(tuple(np.flatnonzero(labels == c).tolist()))
    comps.sort()
    witness = tuple(c[0] for c in comps)
    return RootReport(len(comps), witness, tuple(comps))


def _covers(adj: np.ndarray, subset) -> bool:
    return bool(adj[list(subset)].any(axis=0).all())


def broadcast_report(g: CommGraph, max_size: int | None = None) -> BroadcastReport | None:
    """Smallest broadcasting set of ``g`` by exhaustive search.

    Subsets are tried in increasing size and lexicographic order, so the
    witness is the lexicographically least minimum set. With ``max_size`` the
    search stops early and returns ``None`` if no set of that size covers.
    """
    n = g.n
    if n > MAX_BROADCAST_SEARCH_N:
        raise ValueError(
            f"exhaustive broadcasting-set search capped at n={MAX_BROADCAST_SEARCH_N}, got n={n}"
        )
    limit = n if max_size is None else min(max_size, n)
    for size in range(1, limit + 1):
        for subset in itertools.combinations(range(n), size):
            if _covers(g.adj, subset):
                return BroadcastReport(size, subset)
    return None


def is_k_rooted(g: CommGraph, k: int) -> bool:
    return root_report(g).source_scc_count <= k


def is_k_broadcastable(g: CommGraph, k: int) -> bool:
    return broadcast_report(g, max_size=k) is not None
