from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.errors import InvalidInput
from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import relative_spectrum, restrict_pair
from app.services.linear_series.backends import ProjectiveBackend
from app.services.linear_series.grids import quadrature
from app.services.linear_series.norm_systems import (
    graded_norm_system,
    l2_gram,
    sampled_sup_norm,
    restrict_level,
    section_product,
    sub_series,
    sub_series_basis,
    submultiplicativity_audit,
    sup_surrogate,
)
from app.services.linear_series.values import (
    gr_quotient_values,
    quotient_distances,
    schwarz_constant,
    value_table,
)
from app.services.linear_series.weights import (
    Bump,
    MetricWeight,
    chart_consistency_gap,
    check_weight,
    distortion_bound,
)
from app.services.okounkov.orders import MonomialOrder
from app.services.okounkov.semigroup import conditions_check, superadditivity_audit


def test_fubini_study_l2_gram_on_p1() -> None:
    backend = ProjectiveBackend("P1", 2)
    gram = l2_gram(backend, MetricWeight(), quadrature(1))
    # ‖z^k‖² = 1/((n+1)·C(n, k))
    expected = np.diag([1 / 3, 1 / 6, 1 / 3])
    assert np.real(gram.gram) == pytest.approx(expected, abs=1e-6)
    assert np.abs(np.imag(gram.gram)).max() <= 1e-8


def test_fubini_study_sup_norms_on_p1() -> None:
    sup = sampled_sup_norm(ProjectiveBackend("P1", 2), MetricWeight())
    # sup |z^k|/(1+|z|²) is 1, 1/2, 1
    assert sup.section_norms == pytest.approx([1.0, 0.5, 1.0], rel=1e-3)
    assert sup.refinement_change < 1e-3


def test_zero_weight_on_the_circle_gives_vanishing_values() -> None:
    backend = ProjectiveBackend("P1", 3)
    weight = MetricWeight(kind="zero")
    gram = l2_gram(backend, weight, quadrature(1, "circle"))
    assert np.real(gram.gram) == pytest.approx(np.eye(4), abs=1e-9)
    values = gr_quotient_values(backend, gram, MonomialOrder("grlex", 1))
    assert values.values == pytest.approx(np.zeros(4), abs=1e-9)
    assert values.method == "hermitian"

    sup = sampled_sup_norm(backend, weight)
    assert sup.section_norms == pytest.approx(np.ones(4), rel=1e-6)
    exact = gr_quotient_values(backend, sup, MonomialOrder("grlex", 1), exact_monomials=True)
    assert exact.budget == 0.0
    assert exact.values == pytest.approx(np.zeros(4), abs=1e-6)


def test_polydisc_weight_needs_a_circle_measure() -> None:
    with pytest.raises(InvalidInput):
        l2_gram(ProjectiveBackend("P1", 1), MetricWeight(kind="zero"), quadrature(1))


def test_weights_are_consistent_across_charts(rng: np.random.Generator) -> None:
    for weight in (
        MetricWeight(),
        MetricWeight(kind="max-log", shift=0.2),
        MetricWeight(bumps=(Bump(center=(0.3 + 0.1j,), height=0.5, radius=0.4),)),
    ):
        assert chart_consistency_gap(weight, 1, rng) <= 1e-9
        check_weight(weight, 1, rng)
    assert not MetricWeight(bumps=(Bump(center=(0j,), height=1.0, radius=1.0),)).torus_invariant


def test_shift_scale_and_distortion() -> None:
    u = MetricWeight()
    points = quadrature(1).points
    assert distortion_bound(u, u.shifted(0.3), 5, points) == pytest.approx(1.5)
    # φ(a) multiplies pointwise norms by e^a
    assert u.scaled(0.7)(points) == pytest.approx(u(points) - 0.7)
    envelope = u.norm_max(u.scaled(1.0))
    assert envelope(points) == pytest.approx(u(points) - 1.0)


def test_quotient_distances_of_a_triangular_family() -> None:
    form = HermitianForm.identity(2, "complex")
    sections = np.array([[1.0, 0.0], [1.0, 1.0]], dtype=np.complex128)
    # the section keyed first is measured modulo the later one
    dist = quotient_distances(form, sections, [(0,), (1,)])
    assert dist == pytest.approx([1.0 / math.sqrt(2.0), math.sqrt(2.0)])
    with pytest.raises(InvalidInput):
        quotient_distances(form, sections, [(0,)])


def test_sup_surrogate_sandwich(rng: np.random.Generator) -> None:
    sup = sampled_sup_norm(ProjectiveBackend("P1", 3), MetricWeight(kind="max-log"))
    cert = sup_surrogate(sup, rng=rng)
    assert cert.lower_factor == 1.0
    assert 1.0 <= cert.upper_factor <= 2.01
    assert cert.passes_audit()


def test_surrogate_values_carry_their_budget(rng: np.random.Generator) -> None:
    backend = ProjectiveBackend("P1", 3)
    sup = sampled_sup_norm(backend, MetricWeight())
    approx = gr_quotient_values(backend, sup, MonomialOrder("grlex", 1), rng=rng)
    exact = gr_quotient_values(backend, sup, MonomialOrder("grlex", 1), exact_monomials=True)
    assert approx.method == "surrogate"
    assert np.max(np.abs(approx.values - exact.values)) <= approx.budget + 1e-9


def test_exact_monomials_need_a_sampled_sup_norm() -> None:
    backend = ProjectiveBackend("P1", 1)
    with pytest.raises(InvalidInput):
        gr_quotient_values(
            backend,
            HermitianForm.identity(2, "complex"),
            MonomialOrder("grlex", 1),
            exact_monomials=True,
        )


def test_value_table_of_fubini_study_l2_norms() -> None:
    rule = quadrature(1)
    order = MonomialOrder("grlex", 1)
    levels = [
        gr_quotient_values(
            ProjectiveBackend("P1", n),
            l2_gram(ProjectiveBackend("P1", n), MetricWeight(), rule),
            order,
        )
        for n in (1, 2, 3, 4)
    ]
    table = value_table(levels, 1)
    assert table.values[0] == pytest.approx([0.0])
    # Φ(n, k) = ½ ln((n+1)·C(n, k))
    assert table.values[2] == pytest.approx(0.5 * np.log([3.0, 6.0, 3.0]), abs=1e-6)
    assert conditions_check(table.sample).passed
    assert schwarz_constant(table) == 0.0


def test_sup_value_table_is_superadditive() -> None:
    order = MonomialOrder("grlex", 1)
    levels = [
        gr_quotient_values(
            ProjectiveBackend("P1", n),
            sampled_sup_norm(ProjectiveBackend("P1", n), MetricWeight()),
            order,
            exact_monomials=True,
        )
        for n in range(1, 7)
    ]
    table = value_table(levels, 1)
    assert superadditivity_audit(table, slack=1e-3).passed


def test_section_product_multiplies_polynomials() -> None:
    one = ProjectiveBackend("P1", 1)
    prod = section_product(one, one, np.array([1.0, 1.0]), np.array([1.0, -1.0]))
    assert prod == pytest.approx([1.0, 0.0, -1.0])


def test_sup_norms_are_submultiplicative(rng: np.random.Generator) -> None:
    audit = submultiplicativity_audit("P1", MetricWeight(), 1, 2, rng, samples=8)
    assert audit.passed
    assert audit.checked == 8


def test_graded_system_builds_requested_levels() -> None:
    system = graded_norm_system("P1", MetricWeight(), MetricWeight().shifted(0.5), [3, 1], "sup")
    assert system.schedule == [1, 3]
    phi, psi = system.level(3).sup_pair()
    assert psi.section_norms == pytest.approx(phi.section_norms * math.exp(-1.5), rel=1e-9)
    with pytest.raises(InvalidInput):
        system.level(3).l2_pair()
    with pytest.raises(InvalidInput):
        system.level(2)
    with pytest.raises(InvalidInput):
        graded_norm_system("P1", MetricWeight(), MetricWeight(), [0])


def test_single_generator_sub_series() -> None:
    # s = z gives V_n = z^n·H⁰(O(n)) inside H⁰(O(2n))
    series = sub_series_basis("P1", [[0, 1]], 1, 4)
    for n, level in series.levels.items():
        assert level.rank == n + 1
        assert sorted(level.leading) == [(k,) for k in range(n, 2 * n + 1)]
        assert level.ambient.n == 2 * n
    report = conditions_check(series.sample())
    assert report.a.passed
    assert report.closure.passed


def test_sub_series_rejects_bad_generators() -> None:
    with pytest.raises(InvalidInput):
        sub_series_basis("P1", [[1, 2, 3]], 1, 2)
    with pytest.raises(InvalidInput):
        sub_series_basis("P1", [[0, 0]], 1, 2)
    with pytest.raises(InvalidInput):
        sub_series_basis("P1", [], 1, 2)


def test_sub_series_norms_are_the_restricted_ambient_norms() -> None:
    phi, psi = MetricWeight(), MetricWeight(kind="max-log")
    # (z0 + z1)^n·H⁰(O(n)) inside H⁰(O(2n))
    system = sub_series("P1", [[1, 1]], 1, 2, phi, psi, "both", check=False)
    full = graded_norm_system("P1", phi, psi, [4], "both", check=False).level(4)
    level = system.level(2)
    sub = system.subspace.levels[2]
    assert level.dim == sub.rank == 3
    assert level.backend.n == 4

    restricted = relative_spectrum(level.l2_pair()).slopes
    expected = relative_spectrum(restrict_pair(full.l2_pair(), sub.matrix.T)).slopes
    assert restricted == pytest.approx(expected, abs=1e-9)

    sup = level.phi_sup
    assert sup.oracle.functionals == pytest.approx(
        full.phi_sup.oracle.functionals @ sub.matrix.T, abs=1e-12
    )
    assert sup.section_norms == pytest.approx(full.phi_sup.oracle(sub.matrix), rel=1e-12)


def test_sub_series_values_use_the_restricted_norm() -> None:
    phi = MetricWeight()
    system = sub_series("P1", [[0, 1]], 1, 3, phi, phi, "l2", check=False)
    rule = quadrature(1)
    order = MonomialOrder("grlex", 1)
    for n, level in system.levels.items():
        sub = system.subspace.levels[n]
        restricted = gr_quotient_values(
            sub.ambient,
            level.phi_l2,
            order,
            sections=np.eye(level.dim),
            leading=sub.leading,
            level=n,
        )
        ambient = gr_quotient_values(
            sub.ambient,
            l2_gram(sub.ambient, phi, rule),
            order,
            sections=sub.matrix,
            leading=sub.leading,
            level=n,
        )
        assert restricted.values == pytest.approx(ambient.values, abs=1e-9)
        assert relative_spectrum(level.l2_pair()).slopes == pytest.approx(0.0, abs=1e-9)


def test_restricting_a_level_of_another_degree_fails() -> None:
    series = sub_series_basis("P1", [[0, 1]], 1, 2)
    level = graded_norm_system("P1", MetricWeight(), MetricWeight(), [4], check=False).level(4)
    restrict_level(level, series.levels[2])
    with pytest.raises(InvalidInput):
        restrict_level(level, series.levels[1])
