from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from app.core.errors import InvalidInput
from app.services.okounkov.semigroup import SemigroupSample

logger = logging.getLogger(__name__)

# Convex bodies in ℝ^d, d ≤ 3.
#   d = 1: interval, exact
#   d = 2: monotone-chain hull on Fractions, shoelace area, exact
#   d = 3: Qhull


@dataclass(frozen=True)
class ConvexBody:
    d: int
    vertices: np.ndarray
    volume: float
    degenerate: bool = False

    @classmethod
    def empty(cls, d: int) -> ConvexBody:
        return cls(d=d, vertices=np.empty((0, d)), volume=0.0, degenerate=True)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Membership for an (m, d) batch."""
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64)).reshape(-1, self.d)
        if not len(self.vertices):
            return np.zeros(len(pts), dtype=bool)
        if self.d == 1:
            lo, hi = self.vertices[0, 0], self.vertices[-1, 0]
            return (pts[:, 0] >= lo - tol) & (pts[:, 0] <= hi + tol)
        if self.degenerate:
            return np.zeros(len(pts), dtype=bool)
        if self.d == 2:
            v = self.vertices
            edges = np.roll(v, -1, axis=0) - v
            rel = pts[:, None, :] - v[None, :, :]
            cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
            return np.all(cross >= -tol, axis=1)
        hull = ConvexHull(self.vertices)
        eq = hull.equations
        return np.all(pts @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "vertices": self.vertices.tolist(),
            "volume": self.volume,
            "degenerate": self.degenerate,
        }


def _cross(o: tuple, a: tuple, b: tuple) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_2d(points: Sequence[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Counter-clockwise hull vertices, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[tuple] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices: Sequence[tuple[Fraction, Fraction]]) -> Fraction:
    n = len(vertices)
    if n < 3:
        return Fraction(0)
    twice = sum(
        vertices[i][0] * vertices[(i + 1) % n][1] - vertices[(i + 1) % n][0] * vertices[i][1]
        for i in range(n)
    )
    return abs(Fraction(twice)) / 2


def convex_hull(points: np.ndarray | Sequence[Sequence[Fraction]], d: int) -> ConvexBody:
    if d not in (1, 2, 3):
        raise InvalidInput("Bodies are supported for d ≤ 3.", details={"d": d})
    if len(points) == 0:
        return ConvexBody.empty(d)
    if d == 1:
        values = [p[0] for p in points]
        lo, hi = min(values), max(values)
        return ConvexBody(
            d=1,
            vertices=np.array([[float(lo)], [float(hi)]]),
            volume=float(hi - lo),
            degenerate=lo == hi,
        )
    if d == 2:
        verts = hull_2d([(Fraction(p[0]), Fraction(p[1])) for p in points])
        area = polygon_area(verts)
        return ConvexBody(
            d=2,
            vertices=np.array([[float(x), float(y)] for x, y in verts]),
            volume=float(area),
            degenerate=area == 0,
        )
    arr = np.asarray([[float(x) for x in p] for p in points], dtype=np.float64)
    try:
        hull = ConvexHull(arr)
    except QhullError:
        return ConvexBody(d=3, vertices=np.unique(arr, axis=0), volume=0.0, degenerate=True)
    return ConvexBody(d=3, vertices=arr[hull.vertices], volume=float(hull.volume))


def _level_candidates(n: int, pts: np.ndarray, d: int) -> list[tuple[Fraction, ...]]:
    """Extreme points of α/n within one level."""
    if d == 1:
        return [(Fraction(int(pts[:, 0].min()), n),), (Fraction(int(pts[:, 0].max()), n),)]
    if d == 2:
        verts = hull_2d([(int(a), int(b)) for a, b in pts])
        return [(Fraction(a, n), Fraction(b, n)) for a, b in verts]
    if len(pts) >= 4:
        try:
            idx = ConvexHull(pts.astype(np.float64)).vertices
            pts = pts[idx]
        except QhullError:
            pass
    return [tuple(Fraction(int(x), n) for x in row) for row in pts]


def scaled_hull(levels: Sequence[tuple[int, np.ndarray]], d: int) -> ConvexBody:
    """Hull of ∪_n Γ_n/n over the given (n, points) levels."""
    candidates: list[tuple[Fraction, ...]] = []
    for n, pts in levels:
        if n >= 1 and len(pts):
            candidates.extend(_level_candidates(n, pts, d))
    return convex_hull(candidates, d)


@dataclass(frozen=True)
class DeltaBody:
    body: ConvexBody
    counts: list[tuple[int, float]]

    @property
    def degenerate(self) -> bool:
        return self.body.degenerate


def body_counts(sample: SemigroupSample, n_min: int = 1) -> list[tuple[int, float]]:
    """#Γ_n / n^d per level."""
    return [(n, len(pts) / float(n) ** sample.d) for n, pts in sample.points(n_min)]


def delta_body(sample: SemigroupSample, n_min: int = 1) -> DeltaBody:
    if n_min < 1:
        raise InvalidInput("n_min must be at least 1.", details={"n_min": n_min})
    body = scaled_hull(sample.points(n_min), sample.d)
    logger.debug(
        "delta body",
        extra={
            "event": "okounkov.body.built",
            "dim": sample.d,
            "n": sample.n_max,
            "width": body.volume,
        },
    )
    return DeltaBody(body=body, counts=body_counts(sample, n_min))
