from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.errors import DegenerateNorm, InvalidInput
from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import Flag, degree, polygon, relative_spectrum
from app.services.norms.bands import (
    degree_band,
    distance_estimate,
    flag_additivity,
    monte_carlo_degree,
    polygon_band,
    truncation_check,
)
from app.services.norms.ellipsoids import (
    audit_ratios,
    design_form,
    john_form,
    khachiyan_design,
    lowner_form,
)
from app.services.norms.oracles import FunctionalFamily, HermitianNorm, random_family


def test_rank_deficient_family_is_rejected() -> None:
    with pytest.raises(DegenerateNorm):
        FunctionalFamily([[1.0, 0.0], [2.0, 0.0]])


def test_sup_ratio_dominates_sampled_ratios(rng: np.random.Generator) -> None:
    family = random_family(rng, 3, 10)
    form = HermitianForm.identity(3)
    xs = rng.standard_normal((500, 3))
    sampled = np.asarray(family.evaluate(xs)) / form.norm(xs)
    assert family.sup_ratio(form) >= sampled.max() * (1 - 1e-12)


def test_khachiyan_design_reaches_leverage_target(rng: np.random.Generator) -> None:
    points = rng.standard_normal((40, 3))
    design = khachiyan_design(points, tol=1e-6)
    assert design.converged
    assert design.max_m <= 3 * (1 + 1e-6)
    assert design.weights.sum() == pytest.approx(1.0)
    assert np.all(design.weights >= 0)


def test_khachiyan_design_rejects_non_spanning_points() -> None:
    with pytest.raises(DegenerateNorm):
        khachiyan_design(np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


@pytest.mark.parametrize("r", [2, 3, 5])
def test_john_form_factors(rng: np.random.Generator, r: int) -> None:
    family = random_family(rng, r, 4 * r)
    cert = john_form(family, rng=rng)
    assert cert.upper_factor == pytest.approx(1.0)
    assert cert.lower_factor >= (1 - 1e-3) / math.sqrt(r)
    assert cert.passes_audit()


@pytest.mark.parametrize("r", [2, 4])
def test_lowner_form_factors(rng: np.random.Generator, r: int) -> None:
    family = random_family(rng, r, 3 * r)
    cert = lowner_form(family, rng=rng)
    assert cert.lower_factor == pytest.approx(1.0)
    assert cert.upper_factor <= math.sqrt(r) * (1 + 1e-3)
    assert cert.passes_audit()


def test_complex_family_certificates_pass_audit(rng: np.random.Generator) -> None:
    family = random_family(rng, 2, 8, "complex")
    for cert in (john_form(family, rng=rng), lowner_form(family, rng=rng)):
        assert cert.passes_audit()
        assert cert.ratio >= 1.0


def test_design_form_sandwich_holds(rng: np.random.Generator) -> None:
    family = random_family(rng, 4, 64)
    cert = design_form(family, rng=rng)
    assert cert.lower_factor == 1.0
    _, lo, hi = audit_ratios(family, cert.form, rng, count=300)
    assert lo >= 1.0 - 1e-9
    assert hi <= cert.upper_factor * (1 + 1e-9)
    assert cert.centered_distance == pytest.approx(0.5 * math.log(cert.upper_factor))


def test_hermitian_norm_certificate_is_exact(make_pair, rng: np.random.Generator) -> None:
    pair = make_pair(3)
    cert = john_form(HermitianNorm(pair.phi), rng=rng)
    assert cert.method == "hermitian"
    assert cert.distance == 0.0


def test_degree_band_is_exact_on_hermitian_oracles(make_pair, rng) -> None:
    pair = make_pair(4, "complex")
    band = degree_band(HermitianNorm(pair.phi), HermitianNorm(pair.psi), rng=rng)
    assert band.rigorous_lower == pytest.approx(degree(pair), abs=1e-9)
    assert band.rigorous_upper == pytest.approx(degree(pair), abs=1e-9)
    assert band.budget.additive == pytest.approx(4 * math.log(4))
    assert band.monte_carlo is None


def test_degree_band_contains_monte_carlo_volume(rng: np.random.Generator) -> None:
    phi = random_family(rng, 2, 6)
    psi = random_family(rng, 2, 5)
    band = degree_band(phi, psi, rng=rng)
    assert band.monte_carlo is not None
    assert band.contains(band.monte_carlo.value, tol=4 * band.monte_carlo.std_error)
    assert band.rigorous_lower <= band.midpoint <= band.rigorous_upper


def test_monte_carlo_degree_matches_hermitian_degree(make_pair, rng) -> None:
    pair = make_pair(2, "complex")
    estimate = monte_carlo_degree(
        HermitianNorm(pair.phi), HermitianNorm(pair.psi), rng=rng, samples=50_000
    )
    assert abs(estimate.value - degree(pair)) <= 5 * estimate.std_error + 1e-9


def test_monte_carlo_refuses_large_dimensions(rng: np.random.Generator) -> None:
    phi = random_family(rng, 3, 6, "complex")
    with pytest.raises(InvalidInput):
        monte_carlo_degree(phi, phi, rng=rng)


def test_band_rejects_norms_on_different_spaces(rng: np.random.Generator) -> None:
    with pytest.raises(InvalidInput):
        degree_band(random_family(rng, 2, 4), random_family(rng, 3, 6), rng=rng)


def test_polygon_band_collapses_for_hermitian_norms(make_pair, rng) -> None:
    pair = make_pair(3)
    band = polygon_band(HermitianNorm(pair.phi), HermitianNorm(pair.psi), rng=rng)
    assert band.budget.additive == 0.0
    exact = polygon(pair)
    for t in (1, 2, 3):
        assert band.lower(t) == pytest.approx(exact.value(t))
        assert band.upper(t) == pytest.approx(exact.value(t))


def test_distance_interval_contains_extreme_slope(make_pair, rng) -> None:
    pair = make_pair(3)
    interval = distance_estimate(HermitianNorm(pair.phi), HermitianNorm(pair.psi), rng=rng)
    extreme = float(np.abs(relative_spectrum(pair).slopes).max())
    assert interval.contains(extreme, tol=1e-9)


def test_flag_additivity_stays_within_budget(rng: np.random.Generator) -> None:
    phi = random_family(rng, 3, 9)
    psi = random_family(rng, 3, 7)
    w = rng.standard_normal((3, 1))
    report = flag_additivity(phi, psi, Flag(subspaces=(w, np.eye(3)), step_slopes=()), rng=rng)
    assert len(report.piece_bands) == 2
    assert report.within_budget


def test_flag_must_end_with_whole_space(rng: np.random.Generator) -> None:
    phi = random_family(rng, 3, 9)
    with pytest.raises(InvalidInput):
        flag_additivity(phi, phi, Flag(subspaces=(np.eye(3)[:, :2],), step_slopes=()), rng=rng)


@pytest.mark.parametrize("a", [-0.5, 0.0, 1.0])
def test_truncated_oracle_degree_matches_closed_form(make_pair, rng, a: float) -> None:
    check = truncation_check(make_pair(3), a, rng=rng)
    assert check.passes
