"""Averaging algorithms driven by an adversary schedule.

Weight matrices are indexed ``w[i, j]``: the weight process ``i`` gives to the
value it received from process ``j``. A weight may only be positive when
``(j, i)`` is an edge of the round graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversary import AdversarySpec, RelaySchedule, ScheduledRound, round_rng
from .geometry import hull_volume

__all__ = [
    "WEIGHT_KINDS",
    "WeightError",
    "WeightRule",
    "Decomposition",
    "RoundRecord",
    "ExecutionTrace",
    "weights_for",
    "check_weights",
    "step",
    "min_broadcast_weight",
    "decompose_update",
    "run",
    "ROW_SUM_TOL",
]

WEIGHT_KINDS = ("equal_neighbor", "random_alpha_safe", "table")
ROW_SUM_TOL = 1e-12
# rows further than this from 1 are rejected rather than renormalised
_RENORMALISE_LIMIT = 1e-9


class WeightError(ValueError):
    """A weight matrix violates row-stochasticity or the graph support."""


@dataclass(frozen=True)
class WeightRule:
    """How processes weigh the values they receive.

    ``table`` holds one fixed ``n x n`` matrix, or a sequence of them used
    cyclically by round.
    """

    kind: str = "equal_neighbor"
    alpha: float | None = None
    seed: int = 0
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight rule {self.kind!r}; expected one of {WEIGHT_KINDS}")
        if self.kind == "random_alpha_safe":
            if self.alpha is None or not (0 < self.alpha <= 1):
                raise ValueError(f"random_alpha_safe needs alpha in (0, 1], got {self.alpha}")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table rule needs a weight table")
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim == 2:
                tab = tab[None]
            if tab.ndim != 3 or tab.shape[1] != tab.shape[2]:
                raise ValueError(f"weight table must be n x n (or a stack of them), got {tab.shape}")
            tab.setflags(write=False)
            object.__setattr__(self, "table", tab)


def check_weights(w: np.ndarray, graph, tol: float = ROW_SUM_TOL) -> None:
    """Raise :class:`WeightError` unless ``w`` is row-stochastic with support in the in-edges."""
    if w.shape != (graph.n, graph.n):
        raise WeightError(f"weight matrix shape {w.shape} does not match n={graph.n}")
    if np.any(w < 0):
        raise WeightError("negative weights")
    off_support = (w > 0) & ~graph.adj.T
    if off_support.any():
        i, j = np.argwhere(off_support)[0]
        raise WeightError(f"process {i} puts weight on {j} but does not receive from it")
    sums = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1) > tol)
    if bad.size:
        raise WeightError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")


def weights_for(rule: WeightRule, rnd: ScheduledRound) -> np.ndarray:
    """Weight matrix of ``rule`` for round ``rnd``."""
    g = rnd.graph
    recv = g.adj.T  # recv[i, j]: i receives from j
    n = g.n
    if rule.kind == "equal_neighbor":
        w = recv / recv.sum(axis=1, keepdims=True)
    elif rule.kind == "random_alpha_safe":
        deg = recv.sum(axis=1)
        if rule.alpha * deg.max() > 1 + 1e-15:
            raise WeightError(
                f"alpha={rule.alpha} infeasible: a process receives {deg.max()} values, "
                f"so alpha must be at most {1 / deg.max():.6g}"
            )
        rng = round_rng(rule.seed, rnd.t, stream=1)
        w = np.zeros((n, n))
        for i in range(n):
            nbrs = np.flatnonzero(recv[i])
            spare = max(0.0, 1.0 - rule.alpha * nbrs.size)
            w[i, nbrs] = rule.alpha + spare * rng.dirichlet(np.ones(nbrs.size))
    else:
        tab = rule.table
        w = np.array(tab[(rnd.t - 1) % tab.shape[0]], dtype=float)
        if w.shape != (n, n):
            raise WeightError(f"weight table is {w.shape}, round graph has n={n}")
    sums = w.sum(axis=1, keepdims=True)
    if np.all(np.abs(sums - 1) <= _RENORMALISE_LIMIT):
        w = w / sums
    check_weights(w, g)
    return w


def step(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One averaging round: ``x'_i = sum_j w[i, j] x_j``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or w.shape != (x.shape[0], x.shape[0]):
        raise ValueError(f"state shape {x.shape} incompatible with weights {w.shape}")
    return w @ x


def min_broadcast_weight(w: np.ndarray, m_set) -> float:
    """Least total weight any process puts on the broadcasting set."""
    m = list(m_set)
    if not m:
        raise ValueError("broadcasting set is empty")
    return float(w[:, m].sum(axis=1).min())


@dataclass(frozen=True)
class Decomposition:
    """``x_i(t) = alpha * xi + (1 - alpha) * xi_prime`` with convex certificates.

    ``xi_coeffs`` is supported on the broadcasting set; both coefficient
    vectors are non-negative and sum to one.
    """

    xi: np.ndarray
    xi_prime: np.ndarray
    xi_coeffs: np.ndarray
    xi_prime_coeffs: np.ndarray
    alpha: float

    def reconstruct(self) -> np.ndarray:
        return self.alpha * self.xi + (1 - self.alpha) * self.xi_prime

    def certificates_ok(self, m_set, tol: float = 1e-12) -> bool:
        outside = np.ones(self.xi_coeffs.size, dtype=bool)
        outside[list(m_set)] = False
        return bool(
            np.all(self.xi_coeffs >= -tol)
            and np.all(self.xi_prime_coeffs >= -tol)
            and abs(self.xi_coeffs.sum() - 1) <= tol
            and abs(self.xi_prime_coeffs.sum() - 1) <= tol
            and np.all(self.xi_coeffs[outside] == 0)
        )


def decompose_update(w_row: np.ndarray, x: np.ndarray, m_set, alpha: float | None = None) -> Decomposition:
    """Split one update into a broadcaster part and a remainder.

    With ``w_M`` the row mass on ``m_set``, ``xi`` is the ``w_M``-normalised
    average of the broadcasters and ``xi_prime`` mixes ``xi`` with the
    normalised average of everyone else. ``alpha`` defaults to ``w_M``.
    """
    w_row = np.asarray(w_row, dtype=float)
    x = np.asarray(x, dtype=float)
    m = list(m_set)
    if not m:
        raise ValueError("broadcasting set is empty")
    in_m = np.zeros(w_row.size, dtype=bool)
    in_m[m] = True
    w_m = float(w_row[in_m].sum())
    if alpha is None:
        alpha = w_m
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha > w_m + 1e-15:
        raise ValueError(f"alpha={alpha} exceeds the weight {w_m} on the broadcasting set")
    alpha = min(alpha, w_m)

    xi_c = np.where(in_m, w_row, 0.0) / w_m
    # (w_M - alpha) xi + (1 - w_M) xi_hat, normalised by its actual mass so the
    # coefficients stay convex when 1 - w_M is pure rounding
    rest = np.where(in_m, 0.0, w_row)
    mix = (w_m - alpha) * xi_c + rest
    total = mix.sum()
    xi_p_c = xi_c if total <= 0.0 else mix / total
    return Decomposition(xi_c @ x, xi_p_c @ x, xi_c, xi_p_c, float(alpha))


@dataclass(frozen=True)
class RoundRecord:
    t: int
    round: ScheduledRound
    weights: np.ndarray = field(repr=False)

    @property
    def m_set(self) -> tuple[int, ...]:
        return self.round.m_set

    @property
    def alpha(self) -> float | None:
        """Measured minimum broadcasting weight, ``None`` without a broadcasting set."""
        if not self.round.m_set:
            return None
        return min_broadcast_weight(self.weights, self.round.m_set)


@dataclass(frozen=True, eq=False)
class ExecutionTrace:
    """States ``X(0) .. X(T)`` of one execution plus the rounds that produced them.

    ``states[t]`` is the ``(n, d)`` array of outputs after round ``t``;
    ``records[t - 1]`` describes round ``t``.
    """

    states: np.ndarray = field(repr=False)
    records: tuple[RoundRecord, ...] = field(repr=False)
    relay_rounds: int = 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def d(self) -> int:
        return self.states.shape[2]

    @property
    def rounds(self) -> int:
        return len(self.records)

    @property
    def initial_volume(self) -> float:
        return hull_volume(self.states[0])

    def before(self, t: int) -> np.ndarray:
        return self.states[t - 1]

    def after(self, t: int) -> np.ndarray:
        return self.states[t]

    def record(self, t: int) -> RoundRecord:
        return self.records[t - 1]

    def alphas(self) -> list[float | None]:
        return [r.alpha for r in self.records]


def run(adversary: AdversarySpec, rule: WeightRule, x0, rounds: int, relay_rounds: int = 1) -> ExecutionTrace:
    """Execute ``rounds`` (macro-)rounds of the averaging algorithm.

    With ``relay_rounds > 1`` each averaging step uses the product of that
    many consecutive adversary graphs, i.e. messages are relayed in between.
    """
    if rounds < 1:
        raise ValueError(f"need at least one round, got {rounds}")
    if relay_rounds < 1:
        raise ValueError(f"relay_rounds must be >= 1, got {relay_rounds}")
    x = np.array(x0, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != adversary.n:
        raise ValueError(f"{x.shape[0]} initial vectors for n={adversary.n} processes")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial vectors must be finite")
    schedule = RelaySchedule(adversary, relay_rounds)
    states = np.empty((rounds + 1,) + x.shape)
    states[0] = x
    records = []
    for t in range(1, rounds + 1):
        rnd = schedule(t)
        w = weights_for(rule, rnd)
        x = step(x, w)
        states[t] = x
        records.append(RoundRecord(t, rnd, w))
    states.setflags(write=False)
    return ExecutionTrace(states, tuple(records), relay_rounds)
