from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from app.core.errors import InvalidInput, UnboundedLaw
from app.services.hermitian.pairs import SpectralMeasure
from app.services.limit_laws.measures import (
    GriddedCDF,
    cauchy_budget,
    cdf_from_truncated_means,
    kolmogorov,
    law_polygon,
    polygon_distance,
    richardson,
    truncated_mean,
    truncated_means,
)
from app.services.limit_laws.report import convergence_report


def _uniform_level(n: int) -> SpectralMeasure:
    # midpoints of [0, 1], the law of a linear filtration sampled at level n
    return SpectralMeasure.uniform((np.arange(n) + 0.5) / n)


def test_truncated_mean_is_expectation_of_max() -> None:
    law = SpectralMeasure.uniform([-1.0, 0.0, 2.0])
    assert truncated_mean(law, -5.0) == pytest.approx(law.mean)
    assert truncated_mean(law, 0.5) == pytest.approx((0.5 + 0.5 + 2.0) / 3)
    assert truncated_mean(law, 3.0) == pytest.approx(3.0)
    grid = np.array([-5.0, 0.5, 3.0])
    assert truncated_means(law, grid) == pytest.approx([law.mean, 1.0, 3.0])


def test_kolmogorov_against_continuous_reference() -> None:
    law = _uniform_level(50)
    assert kolmogorov(law, stats.uniform()) == pytest.approx(1.0 / 100, abs=1e-12)
    assert kolmogorov(stats.uniform(), law) == kolmogorov(law, stats.uniform())


def test_kolmogorov_between_step_laws() -> None:
    first = SpectralMeasure.uniform([0.0, 1.0])
    second = SpectralMeasure.dirac(0.0)
    assert kolmogorov(first, second) == pytest.approx(0.5)
    assert kolmogorov(first, first) == 0.0


def test_kolmogorov_needs_a_step_law() -> None:
    with pytest.raises(InvalidInput):
        kolmogorov(stats.norm(), stats.uniform())


def test_richardson_removes_first_order_error() -> None:
    ns = [10, 20]
    values = np.array([[1.0 + 1.0 / 10], [1.0 + 1.0 / 20]])
    assert richardson(ns, values) == pytest.approx([1.0])
    with pytest.raises(ValueError, match="RICHARDSON_LEVELS_NOT_INCREASING"):
        richardson([20, 10], values)


def test_cdf_recovered_from_truncated_means() -> None:
    law = SpectralMeasure.uniform(np.linspace(-1.0, 1.0, 201))
    a = np.linspace(-1.5, 1.5, 301)
    limit = cdf_from_truncated_means(a, truncated_means(law, a))
    assert kolmogorov(limit, stats.uniform(loc=-1.0, scale=2.0)) <= 0.02
    assert limit.to_measure().mean == pytest.approx(0.0, abs=0.02)


def test_gridded_cdf_validation() -> None:
    with pytest.raises(ValueError, match="CDF_NOT_MONOTONE"):
        GriddedCDF(t=np.array([0.0, 1.0]), values=np.array([0.8, 0.2]))
    with pytest.raises(ValueError, match="GRID_NOT_INCREASING"):
        GriddedCDF(t=np.array([1.0, 0.0]), values=np.array([0.2, 0.8]))
    cdf = GriddedCDF(t=np.array([0.0, 1.0]), values=np.array([0.25, 1.0]))
    assert cdf.cdf(-1.0) == 0.0
    assert cdf.cdf(0.5) == 0.25
    assert cdf.tail() == pytest.approx([1.0, 0.75])


def test_law_polygon_takes_large_atoms_first() -> None:
    law = SpectralMeasure.uniform([1.0, -1.0])
    t, p = law_polygon(law)
    assert t == pytest.approx([0.0, 0.5, 1.0])
    assert p == pytest.approx([0.0, 0.5, 0.0])
    assert polygon_distance(law, SpectralMeasure.dirac(0.0)) == pytest.approx(0.5)


def test_cauchy_budget() -> None:
    assert cauchy_budget(1) == pytest.approx(0.5 * math.log(2.0))
    assert cauchy_budget(4) == pytest.approx(2 * math.log(4) + 0.5 * math.log(2.0))
    with pytest.raises(ValueError):
        cauchy_budget(0)


def test_convergence_report_on_exact_laws() -> None:
    laws = {n: _uniform_level(n) for n in (10, 20, 40, 80)}
    report = convergence_report(laws, np.linspace(-2.0, 2.0, 401), bound=1.0, rel_tol=0.01)
    assert report.converged
    assert report.schedule == [10, 20, 40, 80]
    assert np.all(report.budgets == 0.0)
    assert report.energy_limit == pytest.approx(0.5)
    assert kolmogorov(report.limit, stats.uniform()) <= 0.05
    assert report.to_dict()["converged"] is True


def test_convergence_report_budgets_follow_ranks() -> None:
    laws = {n: _uniform_level(n) for n in (4, 8)}
    report = convergence_report(laws, ranks={4: 4, 8: 8})
    assert report.budgets == pytest.approx([cauchy_budget(4) / 4, cauchy_budget(8) / 8])


def test_convergence_report_rejects_unbounded_laws() -> None:
    laws = {1: SpectralMeasure.uniform([0.0, 3.0])}
    with pytest.raises(UnboundedLaw):
        convergence_report(laws, bound=1.0)


def test_single_level_is_not_converged() -> None:
    report = convergence_report({5: _uniform_level(5)})
    assert not report.converged
    assert report.kolmogorov.size == 0
