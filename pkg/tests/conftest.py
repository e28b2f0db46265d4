import itertools

import numpy as np
import pytest

from subspace_consensus.graph import CommGraph

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graph(rng, n, p=0.3) -> CommGraph:
    return CommGraph(rng.random((n, n)) < p)


# -- independent oracles: plain Python sets and loops, no numpy graph code --

def edge_set(g: CommGraph) -> set:
    return {(i, j) for i in range(g.n) for j in range(g.n) if g.adj[i][j]}


def oracle_compose(e1: set, e2: set, n: int) -> set:
    return {(i, j) for i in range(n) for j in range(n) for u in range(n) if (i, u) in e1 and (u, j) in e2}


def oracle_reach(edges: set, n: int, start) -> set:
    seen = set(start)
    stack = list(start)
    while stack:
        u = stack.pop()
        for v in range(n):
            if (u, v) in edges and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def oracle_min_root_set(g: CommGraph) -> int:
    edges, n = edge_set(g), g.n
    for size in range(1, n + 1):
        for m in itertools.combinations(range(n), size):
            if len(oracle_reach(edges, n, m)) == n:
                return size
    raise AssertionError("unreachable")


def oracle_min_broadcast(g: CommGraph) -> tuple[int, tuple]:
    edges, n = edge_set(g), g.n
    for size in range(1, n + 1):
        for m in itertools.combinations(range(n), size):
            if all(any((i, j) in edges for i in m) for j in range(n)):
                return size, m
    raise AssertionError("unreachable")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s[1:])):
        ok, msg = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {msg}")
