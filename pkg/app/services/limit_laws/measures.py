from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from app.core.errors import InvalidInput
from app.services.hermitian.pairs import SpectralMeasure

# Law-level diagnostics. Laws are SpectralMeasure atoms, step CDFs on a grid,
# or continuous scipy.stats references (anything with a vectorized `cdf`).


@runtime_checkable
class ContinuousLaw(Protocol):
    def cdf(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class GriddedCDF:
    """Right-continuous step CDF: value[k] on [t[k], t[k+1]), 0 before t[0]."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("INVALID_GRIDDED_CDF")
        if np.any(np.diff(t) <= 0):
            raise ValueError("GRID_NOT_INCREASING")
        if np.any(np.diff(v) < -1e-12) or v.min() < -1e-12 or v.max() > 1 + 1e-12:
            raise ValueError("CDF_NOT_MONOTONE")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        idx = np.searchsorted(self.t, x, side="right")
        out = np.where(idx > 0, self.values[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def tail(self) -> np.ndarray:
        """P(Z ≥ t) on the grid, up to the jump at t."""
        return 1.0 - np.concatenate([[0.0], self.values[:-1]])

    def to_measure(self) -> SpectralMeasure:
        """Atoms at the grid points carrying the CDF jumps; the top absorbs any deficit."""
        jumps = np.diff(np.concatenate([[0.0], self.values]))
        jumps[-1] += 1.0 - self.values[-1]
        keep = jumps > 1e-15
        masses = jumps[keep] / jumps[keep].sum()
        return SpectralMeasure(values=self.t[keep], masses=masses)


Law = SpectralMeasure | GriddedCDF | ContinuousLaw


def truncated_mean(measure: SpectralMeasure, a: float) -> float:
    """E[max(Z, a)]."""
    return float(np.dot(measure.masses, np.maximum(measure.values, a)))


def truncated_means(measure: SpectralMeasure, a_grid: np.ndarray) -> np.ndarray:
    a = np.asarray(a_grid, dtype=np.float64)
    return np.maximum(measure.values[None, :], a[:, None]) @ measure.masses


def _support(law: Law) -> np.ndarray:
    if isinstance(law, SpectralMeasure):
        return law.values
    if isinstance(law, GriddedCDF):
        return law.t
    return np.empty(0)


def _continuous_gap(measure: Law, reference: ContinuousLaw) -> float:
    """Exact sup |F − F_ref| for a step law against a continuous CDF."""
    support = _support(measure)
    ref = np.asarray(reference.cdf(support), dtype=np.float64)
    right = np.asarray(measure.cdf(support), dtype=np.float64)
    left = np.concatenate([[0.0], right[:-1]])
    return float(max(np.max(np.abs(right - ref)), np.max(np.abs(left - ref))))


def kolmogorov(first: Law, second: Law) -> float:
    """
    sup_t |F₁(t) − F₂(t)|. Two step laws are compared on their merged support;
    a continuous reference is compared at both one-sided limits of each step.
    """
    steps = (SpectralMeasure, GriddedCDF)
    a_step, b_step = isinstance(first, steps), isinstance(second, steps)
    if a_step and b_step:
        merged = np.union1d(_support(first), _support(second))
        gap = np.abs(np.asarray(first.cdf(merged)) - np.asarray(second.cdf(merged)))
        return float(np.clip(gap.max(), 0.0, 1.0))
    if a_step:
        return _continuous_gap(first, second)
    if b_step:
        return _continuous_gap(second, first)
    raise InvalidInput("At least one law must be discrete or gridded.")


def richardson(ns: Sequence[int], values: np.ndarray) -> np.ndarray:
    """
    Limit as 1/n → 0 from the last two levels, assuming an O(1/n) error:
    v∞ = (n₂v₂ − n₁v₁)/(n₂ − n₁). Rows of `values` follow `ns`.
    """
    arr = np.asarray(values, dtype=np.float64)
    if len(ns) != arr.shape[0] or not len(ns):
        raise ValueError("RICHARDSON_SHAPE_MISMATCH")
    if len(ns) == 1:
        return arr[0].copy()
    n1, n2 = float(ns[-2]), float(ns[-1])
    if n2 <= n1:
        raise ValueError("RICHARDSON_LEVELS_NOT_INCREASING")
    return (n2 * arr[-1] - n1 * arr[-2]) / (n2 - n1)


def cdf_from_truncated_means(a_grid: np.ndarray, means: np.ndarray) -> GriddedCDF:
    """
    d/da E[max(Z, a)] = P(Z < a); finite differences give the CDF at the
    midpoints, made monotone and clipped to [0, 1]. The survival
    F(a) = P(Z ≥ a) is 1 minus it.
    """
    a = np.asarray(a_grid, dtype=np.float64)
    m = np.asarray(means, dtype=np.float64)
    if a.ndim != 1 or a.shape != m.shape or a.size < 2:
        raise ValueError("TRUNCATED_MEANS_SHAPE")
    slopes = np.diff(m) / np.diff(a)
    cdf = np.maximum.accumulate(np.clip(slopes, 0.0, 1.0))
    return GriddedCDF(t=0.5 * (a[1:] + a[:-1]), values=cdf)


def law_polygon(measure: SpectralMeasure) -> tuple[np.ndarray, np.ndarray]:
    """
    Normalized polygon of a law: P(t) = ∫₀ᵗ Q(1 − s) ds with Q the quantile,
    i.e. atoms taken in decreasing order. Returns breakpoints and values.
    """
    values = measure.values[::-1]
    masses = measure.masses[::-1]
    t = np.concatenate([[0.0], np.cumsum(masses)])
    p = np.concatenate([[0.0], np.cumsum(masses * values)])
    t[-1] = 1.0
    return t, p


def polygon_distance(first: SpectralMeasure, second: SpectralMeasure) -> float:
    """sup over [0, 1] of |P₁ − P₂|; both are piecewise linear, so breakpoints suffice."""
    t1, p1 = law_polygon(first)
    t2, p2 = law_polygon(second)
    grid = np.union1d(t1, t2)
    return float(np.max(np.abs(np.interp(grid, t1, p1) - np.interp(grid, t2, p2))))


def cauchy_budget(rank: int) -> float:
    """A(r) = 2·ln r + ½·ln 2."""
    if rank < 1:
        raise ValueError("RANK_MUST_BE_POSITIVE")
    return 2.0 * float(np.log(rank)) + 0.5 * float(np.log(2.0))
