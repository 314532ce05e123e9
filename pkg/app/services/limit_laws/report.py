from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidInput, UnboundedLaw
from app.services.hermitian.pairs import SpectralMeasure
from app.services.limit_laws.measures import (
    GriddedCDF,
    cauchy_budget,
    cdf_from_truncated_means,
    kolmogorov,
    polygon_distance,
    richardson,
    truncated_means,
)
from app.services.okounkov.limit import default_t_grid, filtered_cdf
from app.services.okounkov.semigroup import ValueTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceReport:
    schedule: list[int]
    # μ̂(V_n)/n, the mean of each law
    mean_slopes: np.ndarray
    a_grid: np.ndarray
    # E[max(Z_n/n, a)], one row per level
    truncated: np.ndarray
    # between consecutive levels
    kolmogorov: np.ndarray
    polygon_decrements: np.ndarray
    cauchy_increments: np.ndarray
    # A(r_n)/n per level, zero when the laws are exact
    budgets: np.ndarray
    extrapolated_means: np.ndarray
    limit: GriddedCDF
    energy_limit: float
    energy_estimate: float | None
    bound: float
    converged: bool

    def limit_measure(self) -> SpectralMeasure:
        return self.limit.to_measure()

    def to_dict(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "mean_slopes": self.mean_slopes.tolist(),
            "kolmogorov": self.kolmogorov.tolist(),
            "polygon_decrements": self.polygon_decrements.tolist(),
            "cauchy_increments": self.cauchy_increments.tolist(),
            "budgets": self.budgets.tolist(),
            "energy_limit": self.energy_limit,
            "energy_estimate": self.energy_estimate,
            "bound": self.bound,
            "converged": self.converged,
        }


def _check_bounded(laws: Mapping[int, SpectralMeasure], bound: float) -> None:
    for n, law in laws.items():
        top = float(np.max(np.abs(law.values)))
        if top > bound + 1e-9:
            raise UnboundedLaw(
                "Law exceeds the bound ‖Z_n‖ ≤ sup_x d(φ(x), ψ(x)).",
                details={"n": n, "max_abs": top, "bound": bound},
            )


def convergence_report(
    laws: Mapping[int, SpectralMeasure],
    a_grid: np.ndarray | None = None,
    *,
    bound: float | None = None,
    ranks: Mapping[int, int] | None = None,
    energy_estimate: float | None = None,
    rel_tol: float | None = None,
) -> ConvergenceReport:
    """
    Cauchy diagnostics for the laws of Z_n/n keyed by n. `ranks` switches on the
    A(r_n)/n allowance for laws built from surrogate norms. Convergence is
    declared when the last (up to three) increments of the truncated means sit
    below the tolerance plus that allowance.
    """
    if not laws:
        raise InvalidInput("No laws to report on.")
    schedule = sorted(laws)
    if bound is not None:
        _check_bounded(laws, bound)
    reach = (
        bound
        if bound is not None
        else max(float(np.max(np.abs(m.values))) for m in laws.values())
    )
    grid = (
        np.asarray(a_grid, dtype=np.float64)
        if a_grid is not None
        else np.linspace(-(reach + 1.0), reach + 1.0, settings.A_GRID_POINTS)
    )
    tol = settings.CONVERGENCE_REL_TOL if rel_tol is None else rel_tol

    ordered = [laws[n] for n in schedule]
    truncated = np.vstack([truncated_means(m, grid) for m in ordered])
    means = np.array([m.mean for m in ordered])
    budgets = np.array(
        [cauchy_budget(ranks[n]) / n if ranks is not None else 0.0 for n in schedule]
    )
    pairs = list(zip(ordered[:-1], ordered[1:], strict=True))
    ks = np.array([kolmogorov(a, b) for a, b in pairs])
    decrements = np.array([polygon_distance(a, b) for a, b in pairs])
    increments = (
        np.max(np.abs(np.diff(truncated, axis=0)), axis=1) if pairs else np.empty(0)
    )

    scale = max(1.0, float(np.max(np.abs(truncated[-1]))))
    recent = slice(max(0, len(increments) - 3), len(increments))
    allowance = tol * scale + budgets[1:][recent]
    converged = bool(len(increments)) and bool(np.all(increments[recent] <= allowance))

    extrapolated = richardson(schedule, truncated)
    limit = cdf_from_truncated_means(grid, extrapolated)
    report = ConvergenceReport(
        schedule=schedule,
        mean_slopes=means,
        a_grid=grid,
        truncated=truncated,
        kolmogorov=ks,
        polygon_decrements=decrements,
        cauchy_increments=increments,
        budgets=budgets,
        extrapolated_means=extrapolated,
        limit=limit,
        energy_limit=float(richardson(schedule, means.reshape(-1, 1))[0]),
        energy_estimate=energy_estimate,
        bound=reach,
        converged=converged,
    )
    logger.info(
        "convergence report",
        extra={
            "event": "limit_laws.report.built",
            "n": schedule[-1],
            "kolmogorov": float(ks[-1]) if ks.size else 0.0,
            "outcome": "converged" if converged else "open",
        },
    )
    return report


def filtered_mean(table: ValueTable, points: int | None = None) -> float:
    """E[Z] = t₀ + ∫_{t₀} P(Z ≥ t) dt on the default t grid, where P(Z ≥ t₀) = 1."""
    grid = default_t_grid(table, points)
    law = filtered_cdf(table, grid)
    return float(grid[0] + np.trapezoid(law.tail, grid))


def okounkov_energy(phi: ValueTable, psi: ValueTable, points: int | None = None) -> float:
    """E[Z_Φ − Z_Ψ] from the two filtered laws on the same body."""
    return filtered_mean(phi, points) - filtered_mean(psi, points)
