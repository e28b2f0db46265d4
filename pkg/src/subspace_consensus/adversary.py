"""Oblivious message adversaries and round scheduling.

An adversary is described by an :class:`AdversarySpec`. The graph of round
``t`` is a pure function of ``(spec, t)``: random kinds draw from a generator
seeded with ``(seed, t)``, so rounds can be regenerated in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import (
    CommGraph,
    broadcast_report,
    compose_all,
    make_graph,
)

__all__ = [
    "KINDS",
    "AdversarySpec",
    "ScheduledRound",
    "round_rng",
    "designate_broadcasters",
    "next_round",
    "sample_k_broadcastable",
    "sample_k_rooted",
    "imposs_graph",
    "default_relay_rounds",
    "RelaySchedule",
    "relay_schedule",
]

KINDS = ("static", "explicit", "random_rooted", "random_broadcastable", "impossibility")


@dataclass(frozen=True)
class AdversarySpec:
    """Which graphs the adversary may pick and how it picks them.

    ``static`` repeats ``graphs[0]``; ``explicit`` cycles through ``graphs``;
    ``random_rooted`` / ``random_broadcastable`` sample a fresh k-rooted /
    k-broadcastable graph each round; ``impossibility`` repeats
    ``imposs_graph(n, k)``.
    """

    n: int
    kind: str
    k: int | None = None
    seed: int = 0
    graphs: tuple[CommGraph, ...] = ()
    extra_edge_prob: float = 0.15

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 processes, got n={self.n}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if self.kind in ("static", "explicit"):
            if not self.graphs:
                raise ValueError(f"{self.kind} adversary needs at least one graph")
            for g in self.graphs:
                if g.n != self.n:
                    raise ValueError(f"graph on {g.n} processes in adversary with n={self.n}")
        elif self.kind == "impossibility":
            if self.k is None or not (1 <= self.k and self.k + 1 <= self.n):
                raise ValueError(f"impossibility adversary needs 1 <= k and k+1 <= n, got k={self.k}, n={self.n}")
        else:
            if self.k is None or not (1 <= self.k <= self.n):
                raise ValueError(f"{self.kind} adversary needs 1 <= k <= n, got k={self.k}, n={self.n}")
        if not (0.0 <= self.extra_edge_prob <= 1.0):
            raise ValueError(f"extra_edge_prob must lie in [0, 1], got {self.extra_edge_prob}")

    @property
    def broadcast_bound(self) -> int:
        """Largest broadcasting set the scheduler will designate."""
        if self.k is None or self.kind == "impossibility":
            return self.n
        return self.k


@dataclass(frozen=True)
class ScheduledRound:
    t: int
    graph: CommGraph
    m_set: tuple[int, ...]

    def __post_init__(self):
        if self.m_set:
            covered = self.graph.adj[list(self.m_set)].any(axis=0)
            if not covered.all():
                raise ValueError(f"m_set {self.m_set} does not cover round-{self.t} graph")


def round_rng(seed: int, t: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(t)]))


def designate_broadcasters(g: CommGraph, k: int) -> tuple[int, ...]:
    """Lexicographically least minimum broadcasting set of size <= k, else ``()``."""
    rep = broadcast_report(g, max_size=k)
    return rep.witness if rep is not None else ()


def _add_extra_edges(adj: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    if p > 0:
        adj = adj | (rng.random(adj.shape) < p)
    return adj


def sample_k_broadcastable(n: int, k: int, rng: np.random.Generator, extra_edge_prob: float = 0.15) -> CommGraph:
    """Random graph built around a broadcasting set of size ``k``."""
    if not (1 <= k <= n):
        raise ValueError(f"k must lie in [1, n], got k={k}, n={n}")
    m = rng.choice(n, size=k, replace=False)
    adj = np.zeros((n, n), dtype=bool)
    adj[rng.choice(m, size=n), np.arange(n)] = True
    adj = _add_extra_edges(adj, extra_edge_prob, rng)
    return CommGraph(adj)


def sample_k_rooted(n: int, k: int, rng: np.random.Generator, extra_edge_prob: float = 0.15) -> CommGraph:
    """Random graph whose processes are all reachable from at most ``k`` roots.

    Non-roots are attached one at a time to a uniformly chosen, already
    attached process, giving a spanning forest of out-trees hanging off the
    roots. Extra edges only enlarge reachability, so the roots keep reaching
    everyone.
    """
    if not (1 <= k <= n):
        raise ValueError(f"k must lie in [1, n], got k={k}, n={n}")
    order = rng.permutation(n)
    n_roots = int(rng.integers(1, k + 1))
    adj = np.zeros((n, n), dtype=bool)
    for pos in range(n_roots, n):
        parent = order[rng.integers(0, pos)]
        adj[parent, order[pos]] = True
    adj = _add_extra_edges(adj, extra_edge_prob, rng)
    return CommGraph(adj)


def imposs_graph(n: int, k: int) -> CommGraph:
    """Static graph with ``k+1`` isolated sources; the rest hear from process 0.

    Processes ``0 .. k`` only hear themselves, so the graph has ``k+1`` source
    components and is not k-rooted.
    """
    if not (k >= 1 and n >= k + 1):
        raise ValueError(f"need n >= k+1 >= 2, got n={n}, k={k}")
    return make_graph(n, [(0, j) for j in range(k + 1, n)])


def next_round(spec: AdversarySpec, t: int) -> ScheduledRound:
    """Graph and designated broadcasting set for round ``t >= 1``."""
    if t < 1:
        raise ValueError(f"rounds are numbered from 1, got t={t}")
    kind = spec.kind
    if kind == "static":
        g = spec.graphs[0]
    elif kind == "explicit":
        g = spec.graphs[(t - 1) % len(spec.graphs)]
    elif kind == "impossibility":
        g = imposs_graph(spec.n, spec.k)
    else:
        rng = round_rng(spec.seed, t)
        sampler = sample_k_rooted if kind == "random_rooted" else sample_k_broadcastable
        g = sampler(spec.n, spec.k, rng, spec.extra_edge_prob)
    return ScheduledRound(t, g, designate_broadcasters(g, spec.broadcast_bound))


def default_relay_rounds(n: int) -> int:
    """Smallest integer number of relay rounds meeting ``(pi^2 + 6)/6 * n + 1``."""
    return math.ceil((math.pi ** 2 + 6) / 6 * n + 1)


@dataclass(frozen=True)
class RelaySchedule:
    """Macro-rounds made of ``relay_rounds`` consecutive adversary rounds.

    Macro-round ``t`` composes raw rounds ``(t-1)*R + 1 .. t*R`` and designates
    a broadcasting set on the composed graph.
    """

    spec: AdversarySpec
    relay_rounds: int = field(default=0)

    def __post_init__(self):
        if self.relay_rounds == 0:
            object.__setattr__(self, "relay_rounds", default_relay_rounds(self.spec.n))
        if self.relay_rounds < 1:
            raise ValueError(f"relay_rounds must be >= 1, got {self.relay_rounds}")

    def raw_rounds(self, t: int) -> list[ScheduledRound]:
        r = self.relay_rounds
        return [next_round(self.spec, s) for s in range((t - 1) * r + 1, t * r + 1)]

    def __call__(self, t: int) -> ScheduledRound:
        if t < 1:
            raise ValueError(f"rounds are numbered from 1, got t={t}")
        raw = self.raw_rounds(t)
        if len(raw) == 1:
            return ScheduledRound(t, raw[0].graph, raw[0].m_set)
        g = compose_all([r.graph for r in raw])
        return ScheduledRound(t, g, designate_broadcasters(g, self.spec.broadcast_bound))


def relay_schedule(spec: AdversarySpec, relay_rounds: int | None = None) -> RelaySchedule:
    return RelaySchedule(spec, relay_rounds or 0)
