"""Verifiers that turn execution traces into per-claim reports.

Every verifier is side-effect free and records every check it performs, so a
report lists all violations rather than stopping at the first one. Margins are
signed so that a non-negative margin means the inequality held.

Claim ids follow the result they check: ``lemma1`` (half-space distance
formula), ``lemma2`` (half-space zone), ``lemma6`` (segment volumes),
``lemma7`` (volume contraction), ``lemma9`` / ``lemma11`` (update and
difference decompositions), ``lemma10`` (projections stay valid),
``lemma13`` (thickness contraction), ``theorem1`` (rooted-to-broadcastable
products), ``theorem2`` (impossibility witness), ``theorem3`` (volume bound)
and ``theorem4`` (limit subspace).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .adversary import (
    AdversarySpec,
    default_relay_rounds,
    imposs_graph,
    round_rng,
    sample_k_rooted,
)
from .dynamics import (
    ExecutionTrace,
    WeightRule,
    check_weights,
    decompose_update,
    run,
)
from .graph import compose_all, is_k_broadcastable

__all__ = [
    "CheckRecord",
    "Report",
    "SubspaceEstimate",
    "hull_volumes",
    "required_rounds",
    "verify_weights",
    "verify_non_expansion",
    "verify_volume_contraction",
    "verify_convergence_bound",
    "run_convergence_bound",
    "verify_thickness_contraction",
    "verify_projection_validity",
    "verify_decomposition",
    "estimate_limit_subspace",
    "verify_limit_subspace",
    "impossibility_initial_vectors",
    "verify_impossibility",
    "random_empty_halfspace",
    "verify_halfspace_zone",
    "sampled_halfspace_distance",
    "verify_halfspace_formula",
    "random_concave_radius",
    "verify_segment_bounds",
    "verify_product_reduction",
]


@dataclass(frozen=True)
class CheckRecord:
    claim: str
    t: int
    lhs: float
    rhs: float
    margin: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "claim": self.claim,
            "round": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "note": self.note,
        }


@dataclass
class Report:
    """All checks of one verifier run."""

    claim: str
    records: list[CheckRecord] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def le(self, t, lhs, rhs, tol=0.0, claim=None, note=""):
        """Record the check ``lhs <= rhs + tol``."""
        lhs, rhs = float(lhs), float(rhs)
        self.records.append(CheckRecord(claim or self.claim, t, lhs, rhs, rhs - lhs, lhs <= rhs + tol, note))

    def ge(self, t, lhs, rhs, tol=0.0, claim=None, note=""):
        """Record the check ``lhs >= rhs - tol``."""
        lhs, rhs = float(lhs), float(rhs)
        self.records.append(CheckRecord(claim or self.claim, t, lhs, rhs, lhs - rhs, lhs >= rhs - tol, note))

    def flag(self, t, ok, claim=None, note="", lhs=float("nan"), rhs=float("nan")):
        self.records.append(CheckRecord(claim or self.claim, t, lhs, rhs, 0.0 if ok else -1.0, bool(ok), note))

    def skip(self, t, reason):
        self.skipped.append((t, reason))

    @property
    def violations(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def worst_margin(self) -> float:
        margins = [r.margin for r in self.records if not math.isnan(r.margin)]
        return min(margins) if margins else float("nan")

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{self.claim:<10} {status}  checks={len(self.records)} "
            f"violations={len(self.violations)} skipped={len(self.skipped)} "
            f"worst_margin={self.worst_margin:.3e}"
        )


# ---------------------------------------------------------------------------
# trace-level checks

def hull_volumes(trace: ExecutionTrace, upto: int | None = None) -> np.ndarray:
    upto = trace.rounds if upto is None else upto
    return np.array([geo.hull_volume(trace.states[t]) for t in range(upto + 1)])


def verify_weights(trace: ExecutionTrace) -> Report:
    rep = Report("weights")
    for rec in trace.records:
        try:
            check_weights(rec.weights, rec.round.graph)
        except ValueError as exc:
            rep.flag(rec.t, False, note=str(exc))
        else:
            rep.flag(rec.t, True)
    return rep


def verify_non_expansion(trace: ExecutionTrace, tol: float = 1e-9) -> Report:
    """Each new output lies in the hull of the previous round and of the inputs."""
    rep = Report("nonexpansion")
    x0 = trace.states[0]
    for t in range(1, trace.rounds + 1):
        prev, cur = trace.before(t), trace.after(t)
        for i, p in enumerate(cur):
            dist, _ = geo.dist_to_hull(p, prev)
            rep.le(t, dist, 0.0, tol, note=f"process {i} vs P(t-1)")
            dist0, _ = geo.dist_to_hull(p, x0)
            rep.le(t, dist0, 0.0, tol, claim="validity", note=f"process {i} vs P(0)")
    return rep


def _numerically_flat(volume: float, points: np.ndarray, rtol: float) -> bool:
    # vol / diam^(d-1) estimates the thinnest width; compare it with the
    # coordinate magnitude, which sets the absolute rounding error of the states
    d = points.shape[1]
    if volume <= 0.0:
        return True
    width = volume / geo.diameter(points) ** (d - 1)
    return width <= rtol * max(1.0, float(np.abs(points).max()))


def verify_volume_contraction(trace: ExecutionTrace, tol: float = 1e-9, degenerate_rtol: float = 1e-6) -> Report:
    """Per-round hull-volume ratio against ``1 - alpha_t^d``.

    Rounds without a broadcasting set, with more than ``d`` broadcasters, or
    whose previous hull is already flat are skipped with a reason. A hull
    counts as flat once its width falls below ``degenerate_rtol`` times the
    coordinate magnitude; beyond that point rounding in the states dominates
    the volume. ``info['ratios']`` maps round to ratio.
    """
    d = trace.d
    rep = Report("lemma7")
    vols = hull_volumes(trace)
    ratios = {}
    for rec in trace.records:
        t = rec.t
        if not rec.m_set:
            rep.skip(t, "no broadcasting set")
            continue
        if len(rec.m_set) > d:
            rep.skip(t, f"|M(t)|={len(rec.m_set)} > d={d}")
            continue
        prev = trace.before(t)
        if _numerically_flat(vols[t - 1], prev, degenerate_rtol):
            rep.skip(t, "already degenerate")
            continue
        ratio = vols[t] / vols[t - 1]
        ratios[t] = ratio
        rep.le(t, ratio, 1.0 - rec.alpha ** d, tol)
        rep.ge(t, ratio, 0.0, claim="lemma7.range")
        rep.le(t, ratio, 1.0, tol, claim="lemma7.range")
    rep.info["ratios"] = ratios
    rep.info["volumes"] = vols
    return rep


def required_rounds(alpha: float, d: int, vol0: float, eps: float) -> int:
    """``ceil(alpha^-d * ln(vol0 / eps))``, or 0 when ``eps >= vol0``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps >= vol0:
        return 0
    return math.ceil(alpha ** (-d) * math.log(vol0 / eps))


def verify_convergence_bound(trace: ExecutionTrace, eps: float) -> Report:
    """Hull volume is at most ``eps`` by the guaranteed round.

    ``alpha`` is the least measured minimum broadcasting weight over the
    trace. ``info`` records the bound round and the first round at which the
    volume dropped to ``eps``.
    """
    d = trace.d
    rep = Report("theorem3")
    alphas = trace.alphas()
    for rec in trace.records:
        if not rec.m_set or len(rec.m_set) > d:
            raise ValueError(f"round {rec.t} has no broadcasting set of size <= d={d}")
    alpha = min(alphas)
    vol0 = trace.initial_volume
    t_star = required_rounds(alpha, d, vol0, eps)
    if t_star > trace.rounds:
        raise ValueError(f"trace has {trace.rounds} rounds, bound needs {t_star}")
    vol_star = geo.hull_volume(trace.states[t_star])
    rep.le(t_star, vol_star, eps)

    # volumes are non-increasing, so bisect for the first round under eps
    lo, hi = 0, t_star
    if geo.hull_volume(trace.states[0]) <= eps:
        hi = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if geo.hull_volume(trace.states[mid]) <= eps:
            hi = mid
        else:
            lo = mid + 1
    rep.info.update(alpha=alpha, vol0=vol0, bound_round=t_star, first_round=hi, eps=eps)
    return rep


def run_convergence_bound(
    adversary: AdversarySpec,
    rule: WeightRule,
    x0,
    eps: float,
    relay_rounds: int = 1,
    rounds: int = 64,
    max_rounds: int = 200_000,
) -> Report:
    """Simulate long enough to reach the guaranteed round, then check the bound.

    Rounds are deterministic in ``t``, so a longer rerun extends the shorter
    trace; a longer trace can only lower ``alpha`` and push the bound out.
    The simulated trace is kept in ``info['trace']``.
    """
    while True:
        trace = run(adversary, rule, x0, rounds, relay_rounds)
        alpha = min(a for a in trace.alphas() if a is not None) if trace.rounds else 1.0
        need = required_rounds(alpha, trace.d, trace.initial_volume, eps)
        if need <= rounds:
            rep = verify_convergence_bound(trace, eps)
            rep.info["trace"] = trace
            return rep
        if need > max_rounds:
            raise ValueError(f"bound round {need} exceeds max_rounds={max_rounds}")
        rounds = max(need, 2 * rounds)


def verify_thickness_contraction(
    trace: ExecutionTrace,
    tol: float = 1e-9,
    fixed: list[geo.OrthoProjection] | None = None,
) -> Report:
    """One-round thickness contraction under the broadcaster projection.

    Also checks that thickness never grows under each projection in
    ``fixed`` (identity when not given).
    """
    d = trace.d
    rep = Report("lemma13")
    fixed = [geo.OrthoProjection.identity(d)] if fixed is None else fixed
    for rec in trace.records:
        t = rec.t
        if not rec.m_set:
            raise ValueError(f"round {t} has no broadcasting set")
        prev, cur = trace.before(t), trace.after(t)
        proj = geo.direction_projection(prev[list(rec.m_set)])
        rep.le(t, geo.thickness(cur, proj), (1 - rec.alpha) * geo.thickness(prev, proj), tol)
        for p in fixed:
            rep.le(t, geo.thickness(cur, p), geo.thickness(prev, p), tol, claim="lemma13.monotone")
    return rep


def verify_projection_validity(trace: ExecutionTrace, tol: float = 1e-10) -> Report:
    """Broadcaster projections are symmetric, idempotent, with kernel at most ``|M| - 1``."""
    rep = Report("lemma10")
    for rec in trace.records:
        if not rec.m_set:
            rep.skip(rec.t, "no broadcasting set")
            continue
        proj = geo.direction_projection(trace.before(rec.t)[list(rec.m_set)])
        rep.flag(rec.t, proj.is_valid(tol), note="projection invariants")
        rep.le(rec.t, proj.kernel_dim, len(rec.m_set) - 1, claim="lemma10.kernel")
    return rep


def verify_decomposition(trace: ExecutionTrace, tol: float = 1e-12, diff_tol: float = 1e-10) -> Report:
    """Broadcaster/remainder split of every update, and of every pairwise difference.

    Uses the round's measured minimum broadcasting weight as ``alpha``.
    Reconstruction error is checked against ``tol`` times the magnitude of the
    previous state (at least 1).
    """
    rep = Report("lemma9")
    for rec in trace.records:
        t = rec.t
        if not rec.m_set:
            rep.skip(t, "no broadcasting set")
            continue
        prev, cur = trace.before(t), trace.after(t)
        scale = max(1.0, float(np.abs(prev).max()))
        alpha = rec.alpha
        decs = [decompose_update(rec.weights[i], prev, rec.m_set, alpha) for i in range(trace.n)]
        for i, dec in enumerate(decs):
            err = float(np.abs(dec.reconstruct() - cur[i]).max())
            rep.le(t, err, 0.0, tol * scale, note=f"process {i}")
            rep.flag(t, dec.certificates_ok(rec.m_set), claim="lemma9.certificate", note=f"process {i}")
        proj = geo.direction_projection(prev[list(rec.m_set)])
        for i in range(trace.n):
            for j in range(i + 1, trace.n):
                u_par = decs[i].xi - decs[j].xi
                u_res = decs[i].xi_prime - decs[j].xi_prime
                rep.le(t, np.linalg.norm(proj(u_par)), 0.0, diff_tol * scale, claim="lemma11", note=f"pair {i},{j}")
                diff = alpha * u_par + (1 - alpha) * u_res - (cur[i] - cur[j])
                rep.le(t, np.abs(diff).max(), 0.0, tol * scale, claim="lemma11.identity", note=f"pair {i},{j}")
    return rep


@dataclass(frozen=True)
class SubspaceEstimate:
    window: int
    center: np.ndarray
    basis: np.ndarray
    dim: int
    residual: float


def estimate_limit_subspace(trace: ExecutionTrace, window: int, tol: float = 1e-6) -> SubspaceEstimate:
    """Lowest-dimensional affine subspace within ``tol`` of all late outputs.

    Pools the outputs of the last ``window`` states, centres them, and takes
    the leading right-singular directions, adding directions until every
    pooled point is within ``tol`` of the subspace.
    """
    if not 1 <= window <= trace.rounds + 1:
        raise ValueError(f"window must lie in [1, {trace.rounds + 1}], got {window}")
    pooled = trace.states[-window:].reshape(-1, trace.d)
    center = pooled.mean(axis=0)
    centred = pooled - center
    _, _, vt = np.linalg.svd(centred, full_matrices=True)
    for dim in range(trace.d + 1):
        basis = vt[:dim].T
        off = centred - centred @ basis @ basis.T
        residual = float(np.linalg.norm(off, axis=1).max())
        if residual <= tol:
            break
    return SubspaceEstimate(window, center, basis, dim, residual)


def verify_limit_subspace(trace: ExecutionTrace, k: int, window: int = 20, tol: float = 1e-6) -> Report:
    rep = Report("theorem4")
    est = estimate_limit_subspace(trace, window, tol)
    rep.le(trace.rounds, est.dim, k - 1, note="estimated dimension vs k-1")
    rep.le(trace.rounds, est.residual, tol, note="residual to estimated subspace")
    rep.info.update(dim=est.dim, residual=est.residual, window=window)
    return rep


# ---------------------------------------------------------------------------
# impossibility construction

def impossibility_initial_vectors(n: int, s: int) -> np.ndarray:
    """Inputs in R^(s+1): sources ``0..s`` get unit vectors, source ``s+1`` the origin.

    Processes outside the source components may start anywhere; they get the
    centroid of the source inputs.
    """
    k = s + 1
    x = np.zeros((n, k))
    x[np.arange(k), np.arange(k)] = 1.0
    x[k + 1:] = 1.0 / (k + 1)
    return x


def verify_impossibility(n: int, s: int, rounds: int, rule: WeightRule | None = None) -> Report:
    """Run the non-(s+1)-rooted construction and check its witness every round.

    The ``s + 2`` source processes must keep their inputs bit for bit, and
    those inputs span an affine space of dimension ``s + 1``.
    """
    if not n >= s + 2:
        raise ValueError(f"need n >= s+2, got n={n}, s={s}")
    rule = rule or WeightRule("equal_neighbor")
    k = s + 1
    spec = AdversarySpec(n, "static", graphs=(imposs_graph(n, k),))
    x0 = impossibility_initial_vectors(n, s)
    trace = run(spec, rule, x0, rounds)
    rep = Report("theorem2")
    sources = np.arange(k + 1)
    for t in range(rounds + 1):
        held = trace.states[t][sources]
        rep.flag(t, np.array_equal(held, x0[sources]), note="sources keep their inputs")
        rep.ge(t, geo.affine_dim(held), s + 1, note="affine dimension of source outputs")
    rep.info.update(trace=trace, sources=sources.tolist())
    return rep


# ---------------------------------------------------------------------------
# half-spaces

def random_empty_halfspace(points: np.ndarray, rng: np.random.Generator, sigma: float | None = None) -> geo.HalfSpace:
    """Open half-space missing all ``points``: a supporting hyperplane pushed outwards by ``|N(0, sigma)|``."""
    d = points.shape[1]
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    support = float((points @ u).max())
    if sigma is None:
        sigma = max(geo.diameter(points), 1e-12) / 2
    offset = abs(rng.normal(0.0, sigma))
    return geo.HalfSpace(q=(support + offset) * u, v=-u)


def verify_halfspace_zone(trace: ExecutionTrace, trials: int, seed: int = 0, tol: float = 1e-9) -> Report:
    """``dist(X(t), H) >= alpha_t * dist(P_M(t-1), H)`` for random empty half-spaces ``H``.

    Every tenth trial uses a supporting half-space (zero offset).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rep = Report("lemma2")
    rng = np.random.default_rng(seed)
    for rec in trace.records:
        if not rec.m_set:
            rep.skip(rec.t, "no broadcasting set")
            continue
        prev, cur = trace.before(rec.t), trace.after(rec.t)
        for trial in range(trials):
            h = random_empty_halfspace(prev, rng, sigma=0.0 if trial % 10 == 0 else None)
            norm = np.linalg.norm(h.v)
            # signed distances; rounding may put a boundary point a hair inside h
            lhs = float(h.signed(cur).min()) / norm
            rhs = rec.alpha * float(h.signed(prev[list(rec.m_set)]).min()) / norm
            rep.ge(rec.t, lhs, -tol, claim="lemma2.empty", note="X(t) stays outside H")
            rep.ge(rec.t, lhs, rhs, tol)
    return rep


def sampled_halfspace_distance(z, h: geo.HalfSpace, samples: int, rng: np.random.Generator, stages: int = 20) -> float:
    """Infimum of ``|z - p|`` over random points ``p`` of ``h``.

    Derivative-free random search: each stage samples a ball around the best
    member of ``h`` found so far and halves the radius. Only membership tests
    and Euclidean distances are used.
    """
    z = np.asarray(z, dtype=float)
    d = z.size
    per_stage = max(1, samples // stages)
    radius = 2.0 * (np.linalg.norm(z - h.q) + 1.0)
    center = z
    best, best_dist = None, math.inf
    for _ in range(stages):
        dirs = rng.standard_normal((per_stage, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = radius * rng.random(per_stage) ** (1.0 / d)
        cand = center + dirs * radii[:, None]
        cand = cand[h.contains(cand)]
        if cand.size:
            dists = np.linalg.norm(cand - z, axis=1)
            i = int(dists.argmin())
            if dists[i] < best_dist:
                best, best_dist = cand[i], float(dists[i])
        if best is not None:
            center = best
            radius *= 0.5
    return best_dist


def verify_halfspace_formula(trials: int = 100, seed: int = 0, samples: int = 100_000, d: int = 3, tol: float = 1e-3) -> Report:
    """Closed-form point-to-half-space distance against :func:`sampled_halfspace_distance`."""
    rep = Report("lemma1")
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        q = rng.uniform(-1, 1, d)
        v = rng.standard_normal(d)
        z = rng.uniform(-1, 1, d)
        if (z - q) @ v < 0:
            v = -v
        h = geo.HalfSpace(q, v)
        formula = geo.dist_to_halfspace(z, h)
        oracle = sampled_halfspace_distance(z, h, samples, rng)
        rep.le(trial, abs(formula - oracle), tol, note="formula vs sampled infimum")
        rep.ge(trial, oracle, formula, 1e-12, claim="lemma1.lower", note="sampled points cannot beat the infimum")
    return rep


# ---------------------------------------------------------------------------
# concave radius functions

def random_concave_radius(rng: np.random.Generator, h: float = 1.0, samples: int = 2001) -> geo.RadiusFunction:
    """Minimum of positive affine pieces plus a concave power bump, sampled on ``[0, h]``."""
    pieces = int(rng.integers(1, 5))
    left = rng.uniform(0.0, 2.0, pieces)
    right = rng.uniform(0.0, 2.0, pieces)
    bump = rng.uniform(0.0, 1.0)
    power = rng.uniform(0.2, 1.0)
    xs = np.linspace(0.0, h, samples)
    lines = left[:, None] + (right - left)[:, None] * (xs / h)
    rs = lines.min(axis=0) + bump * (xs * (h - xs) / h ** 2) ** power
    return geo.RadiusFunction(h, xs, rs)


def verify_segment_bounds(
    trials: int = 50,
    seed: int = 0,
    dims=(1, 2, 3),
    alphas=(0.25, 0.5, 0.75),
) -> Report:
    """Segment-volume bounds on random concave radius functions, and tightness for ``r = h - x``."""
    rep = Report("lemma6")
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        h = float(rng.uniform(0.5, 3.0))
        r = random_concave_radius(rng, h)
        for d in dims:
            for a in alphas:
                b = geo.segment_volume_bounds(r, a, d)
                note = f"trial {trial} d={d} alpha={a}"
                rep.le(trial, b.left_integral, b.left_bound, b.budget, note="left " + note)
                rep.ge(trial, b.right_integral, b.right_bound, b.budget, note="right " + note)
    for d in dims:
        for a in alphas:
            h = 1.0
            r = geo.RadiusFunction.from_callable(lambda x: h - x, h)
            b = geo.segment_volume_bounds(r, a, d)
            note = f"extremal d={d} alpha={a}"
            rep.le(-1, abs(b.left_integral - b.left_bound), b.budget, claim="lemma6.tight", note="left " + note)
            rep.le(-1, abs(b.right_integral - b.right_bound), b.budget, claim="lemma6.tight", note="right " + note)
    return rep


# ---------------------------------------------------------------------------
# graph products

def verify_product_reduction(
    n: int,
    k: int,
    trials: int = 1000,
    seed: int = 0,
    length: int | None = None,
    extra_edge_prob: float = 0.15,
) -> Report:
    """Products of ``length`` random k-rooted graphs are k-broadcastable.

    ``length`` defaults to ``ceil((pi^2 + 6)/6 * n + 1)``.
    """
    length = default_relay_rounds(n) if length is None else length
    rep = Report("theorem1")
    for trial in range(trials):
        rng = round_rng(seed, trial, stream=2)
        graphs = [sample_k_rooted(n, k, rng, extra_edge_prob) for _ in range(length)]
        prod = compose_all(graphs)
        rep.flag(trial, is_k_broadcastable(prod, k), note=f"n={n} k={k} length={length}")
    rep.info.update(n=n, k=k, length=length, trials=trials)
    return rep
