from __future__ import annotations

import numpy as np
import pytest

from app.core.errors import InvalidInput
from app.services.hermitian.pairs import SpectralMeasure
from app.services.limit_laws.measures import kolmogorov
from app.services.okounkov.bodies import body_counts, delta_body
from app.services.okounkov.limit import (
    brunn_minkowski_audit,
    default_t_grid,
    empirical_level_law,
    filtered_cdf,
    g_function,
    realization_cdf,
)
from app.services.okounkov.orders import MonomialOrder, monomial_basis
from app.services.okounkov.semigroup import (
    SemigroupSample,
    ValueTable,
    closure_audit,
    conditions_check,
    full_sample,
    sample_from_generators,
    superadditivity_audit,
    theta_estimate,
)


def _homogeneous_table(d: int, n_max: int, g) -> ValueTable:
    """Φ(n, α) = n·g(α/n), Φ(0, 0) = 0."""
    sample = full_sample(d, n_max)

    def values(n: int, pts: np.ndarray) -> np.ndarray:
        if n == 0:
            return np.zeros(len(pts))
        return n * g(pts / n)

    return ValueTable.from_function(sample, values)


def test_monomial_orders_break_degree_ties_differently() -> None:
    alpha, beta = (1, 0, 1), (0, 2, 0)
    assert MonomialOrder("grlex", 3).less(beta, alpha)
    assert MonomialOrder("grevlex", 3).less(alpha, beta)
    assert MonomialOrder("lex", 3).less(beta, alpha)
    basis = monomial_basis(2, 2)
    assert len(basis) == 6
    assert basis[0] == (0, 0)


def test_unknown_order_is_rejected() -> None:
    with pytest.raises(InvalidInput):
        MonomialOrder("revlex", 2)


def test_full_sample_satisfies_the_conditions() -> None:
    report = conditions_check(full_sample(2, 6))
    assert report.passed
    assert report.c.witness["lattice_index"] == 1
    assert report.to_dict()["closure"]["passed"]


def test_even_levels_fail_the_lattice_condition() -> None:
    sample = sample_from_generators(1, [(2, 0), (2, 2)], 8)
    assert sample.count(3) == 0
    report = conditions_check(sample)
    assert report.a.passed
    assert not report.c.passed
    assert report.c.witness["lattice_index"] == 4
    assert report.closure.passed


def test_closure_audit_reports_a_missing_sum() -> None:
    sample = full_sample(1, 4)
    levels = dict(sample.levels)
    levels[2] = levels[2][:-1]
    broken = SemigroupSample(d=1, levels=levels)
    audit = closure_audit(broken)
    assert not audit.passed
    assert audit.violation is not None


def test_delta_body_of_the_simplex() -> None:
    sample = full_sample(2, 20)
    body = delta_body(sample)
    assert body.body.volume == pytest.approx(0.5)
    n, density = body_counts(sample)[-1]
    assert n == 20
    assert density == pytest.approx(21 * 22 / 2 / 400)


def test_superadditivity_for_concave_and_convex_perspectives() -> None:
    concave = _homogeneous_table(1, 12, lambda x: -(x[:, 0] ** 2))
    assert superadditivity_audit(concave).passed
    convex = _homogeneous_table(1, 12, lambda x: x[:, 0] ** 2)
    audit = superadditivity_audit(convex)
    assert not audit.passed
    assert audit.witness is not None


def test_filtered_law_of_a_linear_filtration_is_uniform() -> None:
    table = _homogeneous_table(1, 40, lambda x: x[:, 0])
    assert theta_estimate(table) == pytest.approx(1.0)
    grid = np.linspace(0.0, 1.0, 41)
    law = filtered_cdf(table, grid)
    assert law.is_monotone
    assert np.max(np.abs(law.tail - (1.0 - grid))) <= 0.05
    assert brunn_minkowski_audit(law, 1, tol=2.0 / 40).passed


def test_filtered_law_on_the_simplex() -> None:
    # Z = x_1 for x uniform on the triangle: P(Z ≥ t) = (1 − t)²
    table = _homogeneous_table(2, 24, lambda x: x[:, 0])
    grid = np.linspace(0.0, 0.95, 20)
    law = filtered_cdf(table, grid)
    assert np.max(np.abs(law.tail - (1.0 - grid) ** 2)) <= 0.1
    assert brunn_minkowski_audit(law, 2, tol=2.0 / 24).passed


def test_concave_filtration_law_and_level_law_agree() -> None:
    # Z = −U² with U uniform on [0, 1]: P(Z ≥ t) = √(−t)
    table = _homogeneous_table(1, 60, lambda x: -(x[:, 0] ** 2))
    grid = default_t_grid(table, 50)
    law = filtered_cdf(table, grid)
    expected = np.sqrt(np.clip(-grid, 0.0, 1.0))
    assert np.max(np.abs(law.tail - expected)) <= 0.05

    level = empirical_level_law(table, 60)
    assert level.mean == pytest.approx(-1.0 / 3.0, abs=0.02)


def test_g_function_realizes_the_filtered_law() -> None:
    table = _homogeneous_table(1, 30, lambda x: x[:, 0])
    x = np.linspace(0.0, 1.0, 201)
    t = np.linspace(0.0, 1.0, 101)
    g = g_function(table, x, t)
    assert np.all(g.defined)
    assert np.max(np.abs(g.values - x)) <= 0.05
    assert g.concavity_gap() <= 0.05
    tail = realization_cdf(g, t)
    assert np.max(np.abs(tail - (1.0 - t))) <= 0.06


def test_value_table_must_match_the_sample() -> None:
    sample = full_sample(1, 2)
    with pytest.raises(InvalidInput):
        ValueTable(sample=sample, values={0: np.zeros(1), 1: np.zeros(2)})


def test_empty_level_has_no_law() -> None:
    table = _homogeneous_table(1, 3, lambda x: x[:, 0])
    with pytest.raises(InvalidInput):
        empirical_level_law(table, 7)


def test_default_sampling_ranges_follow_the_dimension() -> None:
    assert full_sample(1).n_max == 200
    assert full_sample(2).n_max == 60
    assert sample_from_generators(1, [(1, 0), (1, 1)]).n_max == 200


SEGMENT_PROFILES = {
    "plateau": lambda x: np.minimum(x[:, 0], 0.5),
    "tent": lambda x: np.minimum(2.0 * x[:, 0], 1.5 - x[:, 0]),
    "kink": lambda x: np.minimum(0.0, 0.4 - x[:, 0]),
}

TRIANGLE_PROFILES = {
    "ridge": lambda x: np.minimum(x[:, 0], x[:, 1]),
    "capped": lambda x: np.minimum(0.3, 1.0 - x[:, 0] - 2.0 * x[:, 1]),
}


def _segment_pushforward(g, points: int = 100_000) -> SpectralMeasure:
    x = (np.arange(points, dtype=np.float64) + 0.5) / points
    return SpectralMeasure.uniform(g(x[:, None]))


def _triangle_pushforward(g, n: int = 600) -> SpectralMeasure:
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = i + j <= n
    pts = np.stack([i[keep], j[keep]], axis=1) / n
    return SpectralMeasure.uniform(g(pts))


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(SEGMENT_PROFILES))
def test_level_law_on_the_segment_approaches_the_pushforward(name: str) -> None:
    g = SEGMENT_PROFILES[name]
    table = _homogeneous_table(1, 500, g)
    assert superadditivity_audit(table, max_level=40).passed
    level = empirical_level_law(table, 500)
    assert kolmogorov(level, _segment_pushforward(g)) <= 0.05

    law = filtered_cdf(table, default_t_grid(table, 64))
    assert law.is_monotone
    assert brunn_minkowski_audit(law, 1, tol=0.01).passed


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(TRIANGLE_PROFILES))
def test_level_law_on_the_triangle_approaches_the_pushforward(name: str) -> None:
    g = TRIANGLE_PROFILES[name]
    table = _homogeneous_table(2, 60, g)
    level = empirical_level_law(table, 60)
    assert kolmogorov(level, _triangle_pushforward(g)) <= 0.1

    law = filtered_cdf(table, default_t_grid(table, 64))
    assert brunn_minkowski_audit(law, 2, tol=2.0 / 60).passed
