from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidInput
from app.services.hermitian.pairs import SpectralMeasure
from app.services.okounkov.bodies import ConvexBody, scaled_hull
from app.services.okounkov.semigroup import ValueTable, theta_estimate

logger = logging.getLogger(__name__)

# Limit law of a superadditive filtration read off the semigroup:
#   Γ_Φ^t = {(n, α) : Φ(n, α) ≥ n·t}      (ties included)
#   F(t)  = vol Δ(Γ_Φ^t) / vol Δ(Γ) = P(Z ≥ t)
#   G(x)  = sup{t : x ∈ Δ(Γ_Φ^t)}, Z = G(U) with U uniform on Δ(Γ)


def filtered_body(table: ValueTable, t: float, n_min: int = 1) -> ConvexBody:
    levels = []
    for n, pts in table.sample.points(n_min):
        keep = table.values[n] >= n * t
        if keep.any():
            levels.append((n, pts[keep]))
    return scaled_hull(levels, table.sample.d)


@dataclass(frozen=True)
class FilteredLaw:
    t_grid: np.ndarray
    # F(t) = P(Z ≥ t)
    tail: np.ndarray
    volumes: np.ndarray
    total_volume: float
    theta: float

    def cdf(self) -> np.ndarray:
        """P(Z < t) on the grid."""
        return 1.0 - self.tail

    @property
    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.tail) <= 1e-12))


def filtered_cdf(table: ValueTable, t_grid: np.ndarray, n_min: int = 1) -> FilteredLaw:
    """F(t) = vol Δ(Γ_Φ^t)/vol Δ(Γ) for each t of the grid."""
    grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    total = scaled_hull(table.sample.points(n_min), table.sample.d)
    if total.volume <= 0:
        raise InvalidInput("The body Δ(Γ) is degenerate.", details={"volume": total.volume})
    volumes = np.array([filtered_body(table, float(t), n_min).volume for t in grid])
    law = FilteredLaw(
        t_grid=grid,
        tail=np.clip(volumes / total.volume, 0.0, 1.0),
        volumes=volumes,
        total_volume=total.volume,
        theta=theta_estimate(table),
    )
    logger.debug(
        "filtered law",
        extra={"event": "okounkov.law.filtered", "rows": grid.size, "upper": law.theta},
    )
    return law


def default_t_grid(table: ValueTable, points: int | None = None) -> np.ndarray:
    """Grid from slightly below the smallest sampled Φ/n up to θ."""
    count = points or settings.A_GRID_POINTS
    ratios = np.concatenate([table.ratios(n) for n, _ in table.sample.points(1)])
    lo, hi = float(ratios.min()), theta_estimate(table)
    pad = 0.05 * max(hi - lo, 1e-6)
    return np.linspace(lo - pad, hi, count)


def chord_gap(x: np.ndarray, v: np.ndarray) -> float:
    """Largest amount by which v dips below the chord of its two neighbours."""
    if v.size < 3:
        return 0.0
    w = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
    chord = v[:-2] + w * (v[2:] - v[:-2])
    return float(max(np.max(chord - v[1:-1]), 0.0))


@dataclass(frozen=True)
class GFunction:
    x_grid: np.ndarray
    values: np.ndarray
    t_grid: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def concavity_gap(self) -> float:
        """Concavity defect of G on a 1-d grid."""
        if self.x_grid.ndim != 1:
            raise ValueError("CONCAVITY_AUDIT_NEEDS_1D_GRID")
        return chord_gap(self.x_grid[self.defined], self.values[self.defined])


def g_function(
    table: ValueTable,
    x_grid: np.ndarray,
    t_grid: np.ndarray | None = None,
    n_min: int = 1,
) -> GFunction:
    """
    G(x) = max{t in the grid : x ∈ Δ(Γ_Φ^t)}; NaN outside Δ(Γ).
    Accuracy is the spacing of the t grid.
    """
    d = table.sample.d
    xs = np.asarray(x_grid, dtype=np.float64)
    pts = xs.reshape(-1, 1) if d == 1 and xs.ndim == 1 else xs.reshape(-1, d)
    grid = np.sort(np.asarray(t_grid if t_grid is not None else default_t_grid(table, 256)))
    total = scaled_hull(table.sample.points(n_min), d)
    values = np.full(len(pts), np.nan)
    inside = total.contains(pts, tol=1e-9)
    values[inside] = -np.inf
    for t in grid:
        body = filtered_body(table, float(t), n_min)
        hit = body.contains(pts, tol=1e-9) & inside
        values[hit] = np.maximum(values[hit], t)
    values[np.isneginf(values)] = grid[0]
    return GFunction(x_grid=xs, values=values, t_grid=grid)


def realization_cdf(g: GFunction, t_grid: np.ndarray) -> np.ndarray:
    """P(G(U) ≥ t) for U uniform on the defined grid points."""
    vals = g.values[g.defined]
    if vals.size == 0:
        raise InvalidInput("G is undefined on the whole grid.")
    t = np.asarray(t_grid, dtype=np.float64)
    return np.mean(vals[None, :] >= t[:, None] - 1e-12, axis=1)


def empirical_level_law(table: ValueTable, n: int) -> SpectralMeasure:
    """Uniform law of Φ(n, α)/n over α ∈ Γ_n."""
    if n < 1 or table.sample.count(n) == 0:
        raise InvalidInput("Level is empty.", details={"n": n})
    return SpectralMeasure.uniform(table.ratios(n))


@dataclass(frozen=True)
class BrunnMinkowskiAudit:
    passed: bool
    worst_gap: float


def brunn_minkowski_audit(law: FilteredLaw, d: int, tol: float) -> BrunnMinkowskiAudit:
    """
    t ↦ vol(Δ(Γ_Φ^t))^{1/d} is concave where positive and t < θ.
    Sampled bodies sit within O(1/n_max) of the limit ones, so tol should be of that order.
    """
    mask = (law.volumes > 0) & (law.t_grid < law.theta)
    gap = chord_gap(law.t_grid[mask], law.volumes[mask] ** (1.0 / d))
    return BrunnMinkowskiAudit(passed=gap <= tol, worst_gap=gap)
