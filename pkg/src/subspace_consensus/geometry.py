"""Geometric primitives on finite point clouds in R^d.

Point clouds are ``(m, d)`` float arrays, one point per row.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

__all__ = [
    "HalfSpace",
    "OrthoProjection",
    "RadiusFunction",
    "SegmentVolumeBounds",
    "ChordCheck",
    "as_points",
    "hull_volume",
    "facet_inequalities",
    "in_hull_bruteforce",
    "monte_carlo_volume",
    "dist_to_halfspace",
    "dist_set_to_halfspace",
    "dist_to_hull",
    "direction_basis",
    "direction_projection",
    "thickness",
    "diameter",
    "affine_dim",
    "ball_coeff",
    "segment_volume_bounds",
    "concave_chord_bounds",
]


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"expected a non-empty (m, d) point array, got shape {pts.shape}")
    return pts


# ---------------------------------------------------------------------------
# volume

def hull_volume(points) -> float:
    """d-dimensional volume of the convex hull of ``points``.

    Zero whenever the points lie in a proper affine subspace. Qhull does the
    facet enumeration; the cloud is centred and rescaled first so that nearly
    flat hulls keep their relative precision.
    """
    pts = as_points(points)
    m, d = pts.shape
    if d == 1:
        return float(pts.max() - pts.min())
    if m <= d:
        return 0.0
    centred = pts - pts.mean(axis=0)
    scale = np.abs(centred).max()
    if scale == 0.0:
        return 0.0
    try:
        vol = ConvexHull(centred / scale).volume
    except QhullError:
        # Qhull refuses inputs that are flat within its precision
        return 0.0
    return float(vol * scale ** d)


def facet_inequalities(points, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Supporting hyperplanes ``A x <= b`` of the hull, by brute force.

    Every d-subset of points spanning a hyperplane with all points on one side
    contributes an inequality. Cost is ``C(m, d)``; only for small clouds.
    """
    pts = as_points(points)
    m, d = pts.shape
    scale = max(1.0, float(np.abs(pts).max()))
    rows, rhs = [], []
    for subset in itertools.combinations(range(m), d):
        base = pts[list(subset)]
        diffs = base[1:] - base[0]
        if d == 1:
            normal = np.array([1.0])
        else:
            _, s, vt = np.linalg.svd(diffs, full_matrices=True)
            if s.size < d - 1 or s[-1] <= tol * scale:
                continue
            normal = vt[-1]
        offset = normal @ base[0]
        side = pts @ normal - offset
        if np.all(side <= tol * scale):
            rows.append(normal)
            rhs.append(offset)
        if np.all(side >= -tol * scale):
            rows.append(-normal)
            rhs.append(-offset)
    return np.array(rows).reshape(-1, d), np.array(rhs)


def in_hull_bruteforce(query, points, tol: float = 1e-12) -> np.ndarray:
    a, b = facet_inequalities(points, tol)
    q = as_points(query)
    return np.all(q @ a.T <= b + tol, axis=1)


def monte_carlo_volume(points, samples: int, rng: np.random.Generator, batch: int = 200_000) -> tuple[float, float]:
    """Hit-or-miss volume estimate over the bounding box.

    Returns ``(estimate, standard_error)``. Membership uses
    :func:`facet_inequalities`, which shares no code with :func:`hull_volume`.
    """
    pts = as_points(points)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    box = float(np.prod(hi - lo))
    if box == 0.0:
        return 0.0, 0.0
    a, b = facet_inequalities(pts)
    hits = 0
    done = 0
    while done < samples:
        cnt = min(batch, samples - done)
        q = rng.uniform(lo, hi, size=(cnt, pts.shape[1]))
        hits += int(np.count_nonzero(np.all(q @ a.T <= b, axis=1)))
        done += cnt
    p = hits / samples
    return box * p, box * math.sqrt(p * (1 - p) / samples)


# ---------------------------------------------------------------------------
# half-spaces and distances

@dataclass(frozen=True)
class HalfSpace:
    """Open half-space ``{h : <h - q, v> < 0}``."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        if q.shape != v.shape:
            raise ValueError("q and v must have the same dimension")
        if not np.linalg.norm(v) > 0:
            raise ValueError("normal vector must be non-zero")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    def signed(self, points) -> np.ndarray:
        return (as_points(points) - self.q) @ self.v

    def contains(self, points) -> np.ndarray:
        return self.signed(points) < 0


def dist_to_halfspace(z, h: HalfSpace) -> float:
    """Distance from a point outside ``h`` to ``h``: ``<z - q, v> / |v|``."""
    z = np.asarray(z, dtype=float).ravel()
    s = float((z - h.q) @ h.v)
    if s < 0:
        raise ValueError("point lies inside the open half-space; the distance formula does not apply")
    return s / float(np.linalg.norm(h.v))


def dist_set_to_halfspace(points, h: HalfSpace) -> float:
    """Distance from the convex hull of ``points`` to ``h``.

    Outside ``h`` the distance is an affine function of the point, so over a
    polytope it is minimised at a vertex.
    """
    return min(dist_to_halfspace(p, h) for p in as_points(points))


def _affine_min_norm(pts: np.ndarray) -> np.ndarray:
    """Affine weights of the minimum-norm point in the affine hull of ``pts``."""
    k = pts.shape[0]
    kkt = np.ones((k + 1, k + 1))
    kkt[:k, :k] = pts @ pts.T
    kkt[k, k] = 0.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]


def dist_to_hull(z, points, tol: float = 1e-14) -> tuple[float, np.ndarray]:
    """Euclidean distance from ``z`` to the convex hull of ``points``.

    Wolfe's minimum-norm-point algorithm on the points shifted by ``-z``.
    Returns the distance and convex weights of the nearest hull point.
    """
    pts = as_points(points)
    z = np.asarray(z, dtype=float).ravel()
    rel = pts - z
    scale = float(np.abs(rel).max()) or 1.0
    rel = rel / scale
    m = rel.shape[0]

    start = int(np.argmin(np.einsum("ij,ij->i", rel, rel)))
    active = [start]
    lam = np.array([1.0])
    x = rel[start].copy()
    for _ in range(100 * m):
        j = int(np.argmin(rel @ x))
        if x @ x - rel[j] @ x <= tol or j in active:
            break
        active.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_min_norm(rel[active])
            if np.all(mu > tol):
                lam = mu
                break
            neg = mu <= tol
            theta = np.min(lam[neg] / (lam[neg] - mu[neg]))
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            keep[np.argmax(lam)] = True
            active = [a for a, kp in zip(active, keep) if kp]
            lam = lam[keep] / lam[keep].sum()
        x = lam @ rel[active]
    weights = np.zeros(m)
    weights[active] = lam
    return float(np.linalg.norm(weights @ rel)) * scale, weights


# ---------------------------------------------------------------------------
# projections and thickness

@dataclass(frozen=True, eq=False)
class OrthoProjection:
    """Orthogonal projection on R^d stored as its symmetric idempotent matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"projection matrix must be square, got {p.shape}")
        object.__setattr__(self, "matrix", p)

    @classmethod
    def identity(cls, d: int) -> "OrthoProjection":
        return cls(np.eye(d))

    @classmethod
    def onto_complement(cls, basis: np.ndarray, d: int) -> "OrthoProjection":
        """Projection onto the orthogonal complement of ``span(basis)``; columns orthonormal."""
        basis = np.asarray(basis, dtype=float).reshape(d, -1)
        return cls(np.eye(d) - basis @ basis.T)

    @classmethod
    def onto_span(cls, basis: np.ndarray, d: int) -> "OrthoProjection":
        basis = np.asarray(basis, dtype=float).reshape(d, -1)
        return cls(basis @ basis.T)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix)))

    @property
    def kernel_dim(self) -> int:
        return self.d - self.rank

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T

    def is_valid(self, tol: float = 1e-10) -> bool:
        p = self.matrix
        if not np.allclose(p @ p, p, atol=tol, rtol=0):
            return False
        if not np.allclose(p, p.T, atol=tol, rtol=0):
            return False
        ev = np.linalg.eigvalsh((p + p.T) / 2)
        return bool(np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) <= tol))

    def op_distance(self, other: "OrthoProjection") -> float:
        return float(np.linalg.norm(self.matrix - other.matrix, ord=2))


def direction_basis(points, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis (columns) of ``span{x - x_0}``, differences taken against the first point."""
    pts = as_points(points)
    d = pts.shape[1]
    diffs = pts[1:] - pts[0]
    if diffs.shape[0] == 0:
        return np.zeros((d, 0))
    u, s, _ = np.linalg.svd(diffs.T, full_matrices=False)
    cutoff = rtol * max(1.0, float(np.abs(pts).max()))
    return u[:, s > cutoff]


def direction_projection(points_m, rtol: float = 1e-12) -> OrthoProjection:
    """Orthogonal projection whose kernel is the direction space of ``points_m``."""
    pts = as_points(points_m)
    return OrthoProjection.onto_complement(direction_basis(pts, rtol), pts.shape[1])


def thickness(points, p: OrthoProjection | None = None) -> float:
    """Largest projected pairwise distance ``max |P(x - y)|``."""
    pts = as_points(points)
    if pts.shape[0] < 2:
        return 0.0
    proj = pts if p is None else p(pts)
    return float(pdist(proj).max())


def diameter(points) -> float:
    return thickness(points)


def affine_dim(points, tol: float = 1e-8) -> int:
    """Dimension of the affine hull, counting singular values of the centred cloud
    above ``tol * max(1, largest singular value)``."""
    pts = as_points(points)
    if pts.shape[0] < 2:
        return 0
    s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    return int(np.count_nonzero(s > tol * max(1.0, float(s[0]))))


# ---------------------------------------------------------------------------
# rotational bodies and concave radius functions

def ball_coeff(m: int) -> float:
    """Volume of the unit ball in R^m."""
    if m < 0:
        raise ValueError(f"dimension must be non-negative, got {m}")
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


@dataclass(frozen=True, eq=False)
class RadiusFunction:
    """Samples of a non-negative radius function on ``[0, h]``.

    Between samples the function is taken to be piecewise linear.
    """

    h: float
    xs: np.ndarray
    rs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        rs = np.asarray(self.rs, dtype=float)
        if not self.h > 0:
            raise ValueError(f"interval length must be positive, got {self.h}")
        if xs.ndim != 1 or xs.shape != rs.shape or xs.size < 2:
            raise ValueError("need matching 1-d sample arrays with at least two samples")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        if not (np.isclose(xs[0], 0.0) and np.isclose(xs[-1], self.h)):
            raise ValueError("samples must span [0, h]")
        if np.any(rs < 0):
            raise ValueError("radius samples must be non-negative")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "rs", rs)

    @classmethod
    def from_callable(cls, f, h: float, samples: int = 2001) -> "RadiusFunction":
        xs = np.linspace(0.0, h, samples)
        return cls(h, xs, np.array([f(x) for x in xs], dtype=float))

    def __call__(self, x):
        return np.interp(x, self.xs, self.rs)

    def is_concave(self, tol: float = 1e-12) -> bool:
        """Every sample lies on or above the chord of its two neighbours."""
        x0, x1, x2 = self.xs[:-2], self.xs[1:-1], self.xs[2:]
        r0, r1, r2 = self.rs[:-2], self.rs[1:-1], self.rs[2:]
        chord = r0 + (r2 - r0) * (x1 - x0) / (x2 - x0)
        scale = max(1.0, float(self.rs.max()))
        return bool(np.all(r1 >= chord - tol * scale))


@dataclass(frozen=True)
class SegmentVolumeBounds:
    left_integral: float
    left_bound: float
    right_integral: float
    right_bound: float
    budget: float

    @property
    def left_ok(self) -> bool:
        return self.left_integral <= self.left_bound + self.budget

    @property
    def right_ok(self) -> bool:
        return self.right_integral >= self.right_bound - self.budget

    @property
    def ok(self) -> bool:
        return self.left_ok and self.right_ok


def _trapezoid_with_budget(xs, rs, coeff, power) -> tuple[float, float]:
    f = coeff * rs ** power
    integral = float(np.sum(np.diff(xs) * (f[1:] + f[:-1]) / 2))
    if power < 2:
        # integrand is piecewise linear: trapezoid is exact
        return integral, 0.0
    dx = np.diff(xs)
    slope = np.diff(rs) / dx
    rmax = np.maximum(rs[1:], rs[:-1])
    # |f''| on a linear piece of r is coeff * p(p-1) r^(p-2) slope^2
    curv = coeff * power * (power - 1) * rmax ** (power - 2) * slope ** 2
    return integral, float(np.sum(dx ** 3 * curv) / 12)


def segment_volume_bounds(r: RadiusFunction, alpha: float, d: int) -> SegmentVolumeBounds:
    """Volumes of the two segments of the rotational body of ``r`` split at ``(1 - alpha) h``.

    Integrates ``C_{d-1} r^{d-1}`` by the trapezoid rule on each side and
    evaluates the affine-minorant bounds
    ``left <= C r0^{d-1} h (1 - alpha^d) / (alpha^{d-1} d)`` and
    ``right >= C r0^{d-1} h alpha^d / (alpha^{d-1} d)`` with ``r0 = r((1-alpha) h)``.
    ``budget`` bounds the trapezoid error of either integral.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if not r.is_concave():
        raise ValueError("radius samples are not concave")
    h = r.h
    split = (1 - alpha) * h
    r0 = float(r(split))
    coeff = ball_coeff(d - 1)
    p = d - 1

    left_mask = r.xs < split
    right_mask = r.xs > split
    xl = np.concatenate([r.xs[left_mask], [split]])
    rl = np.concatenate([r.rs[left_mask], [r0]])
    xr = np.concatenate([[split], r.xs[right_mask]])
    rr = np.concatenate([[r0], r.rs[right_mask]])

    left, err_l = _trapezoid_with_budget(xl, rl, coeff, p)
    right, err_r = _trapezoid_with_budget(xr, rr, coeff, p)

    common = coeff * r0 ** p * h / (alpha ** p * d)
    left_bound = common * (1 - alpha ** d)
    right_bound = common * alpha ** d
    rounding = 1e-12 * max(1.0, abs(left), abs(right), abs(left_bound))
    return SegmentVolumeBounds(left, left_bound, right, right_bound, max(err_l, err_r) + rounding)


@dataclass(frozen=True)
class ChordCheck:
    upper_chord_ok: bool
    zero_chord_ok: bool
    worst_violation: float


def concave_chord_bounds(r: RadiusFunction, a: float, b: float, c: float, tol: float = 1e-12) -> ChordCheck:
    """Compare ``r`` on ``[a, c]`` with the two chords through ``(b, r(b))``.

    ``f`` passes through ``(c, r(c))`` and ``g`` through ``(c, 0)``. For concave
    non-negative ``r`` both lie above ``r`` on ``[a, b]`` and below it on
    ``[b, c]``.
    """
    if not a < b < c:
        raise ValueError(f"need a < b < c, got {a}, {b}, {c}")
    rb, rc = float(r(b)), float(r(c))
    xs = r.xs[(r.xs >= a) & (r.xs <= c)]
    xs = np.union1d(xs, [a, b, c])
    rx = r(xs)
    f = (rb - rc) / (c - b) * (c - xs) + rc
    g = rb / (c - b) * (c - xs)
    left = xs <= b
    right = xs >= b
    viol_f = np.concatenate([(rx - f)[left], (f - rx)[right]])
    viol_g = np.concatenate([(rx - g)[left], (g - rx)[right]])
    scale = max(1.0, float(np.abs(rx).max()))
    return ChordCheck(
        bool(viol_f.max() <= tol * scale),
        bool(viol_g.max() <= tol * scale),
        float(max(viol_f.max(), viol_g.max())),
    )
