from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidInput
from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import (
    Flag,
    HermitianPair,
    Polygon,
    degree,
    polygon,
    relative_spectrum,
    subquotient_pairs,
)
from app.services.hermitian.truncation import truncated_degree
from app.services.norms.ellipsoids import SandwichCertificate, john_form, lowner_form
from app.services.norms.oracles import HermitianNorm, NormOracle, max_combine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ErrorBudget:
    additive: float
    source: str

    def __post_init__(self) -> None:
        if self.additive < 0:
            raise ValueError("BUDGET_MUST_BE_NON_NEGATIVE")


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float
    samples: int


@dataclass(frozen=True)
class DegreeBand:
    """
    [lower, upper] is the reported band; [rigorous_lower, rigorous_upper]
    is the tighter certified interval it contains.
    """

    lower: float
    upper: float
    rigorous_lower: float
    rigorous_upper: float
    budget: ErrorBudget
    monte_carlo: MonteCarloEstimate | None = None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.rigorous_lower + self.rigorous_upper)

    @property
    def width(self) -> float:
        return self.rigorous_upper - self.rigorous_lower

    def contains(self, value: float, *, tol: float = 1e-9) -> bool:
        return self.lower - tol <= value <= self.upper + tol


@dataclass(frozen=True)
class Surrogates:
    phi_john: SandwichCertificate
    phi_lowner: SandwichCertificate
    psi_john: SandwichCertificate
    psi_lowner: SandwichCertificate


def _check_same_space(phi: NormOracle, psi: NormOracle) -> None:
    if phi.dim != psi.dim or phi.scalar_kind != psi.scalar_kind:
        raise InvalidInput(
            "Norms live on different spaces.",
            details={"phi": phi.describe(), "psi": psi.describe()},
        )


def fit_surrogates(
    phi: NormOracle, psi: NormOracle, *, rng: np.random.Generator | None = None
) -> Surrogates:
    _check_same_space(phi, psi)
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    return Surrogates(
        phi_john=john_form(phi, rng=rng),
        phi_lowner=lowner_form(phi, rng=rng),
        psi_john=john_form(psi, rng=rng),
        psi_lowner=lowner_form(psi, rng=rng),
    )


def _scaled(cert: SandwichCertificate, factor: float) -> HermitianForm:
    return cert.form.scaled(float(np.log(factor)))


def _outer_pairs(s: Surrogates) -> tuple[HermitianPair, HermitianPair]:
    """
    (low, high) Hermitian pairs with
    deg(low) ≤ deg(W; φ, ψ) ≤ deg(high) on every subquotient W.
    """
    # φ ≤ u·φ_J, ψ ≥ l·ψ_L  give the lower pair
    low = HermitianPair(
        phi=_scaled(s.phi_john, s.phi_john.upper_factor),
        psi=_scaled(s.psi_lowner, s.psi_lowner.lower_factor),
    )
    # φ ≥ l·φ_L, ψ ≤ u·ψ_J  give the upper pair
    high = HermitianPair(
        phi=_scaled(s.phi_lowner, s.phi_lowner.lower_factor),
        psi=_scaled(s.psi_john, s.psi_john.upper_factor),
    )
    return low, high


def monte_carlo_degree(
    phi: NormOracle,
    psi: NormOracle,
    *,
    rng: np.random.Generator,
    samples: int | None = None,
) -> MonteCarloEstimate:
    """
    Degree from the unit-ball volume ratio E[‖θ‖_φ^{-D}] / E[‖θ‖_ψ^{-D}],
    θ uniform on the real unit sphere of dimension D ≤ 4.
    """
    _check_same_space(phi, psi)
    real_dim = phi.dim * (2 if phi.scalar_kind == "complex" else 1)
    if real_dim > 4:
        raise InvalidInput("Monte Carlo volume is limited to real dimension 4.")
    total = settings.MC_SAMPLES if samples is None else samples
    chunk = 100_000

    sums = np.zeros(2)
    squares = np.zeros(3)
    done = 0
    while done < total:
        size = min(chunk, total - done)
        theta = rng.standard_normal((size, real_dim))
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        if phi.scalar_kind == "complex":
            theta = theta[:, : phi.dim] + 1j * theta[:, phi.dim :]
        a = np.asarray(phi.evaluate(theta)) ** (-real_dim)
        b = np.asarray(psi.evaluate(theta)) ** (-real_dim)
        sums += (a.sum(), b.sum())
        squares += (np.dot(a, a), np.dot(b, b), np.dot(a, b))
        done += size

    mean_a, mean_b = sums / total
    var_a = squares[0] / total - mean_a**2
    var_b = squares[1] / total - mean_b**2
    cov = squares[2] / total - mean_a * mean_b
    log_ratio = math.log(mean_a) - math.log(mean_b)
    var_log = (
        var_a / mean_a**2 + var_b / mean_b**2 - 2.0 * cov / (mean_a * mean_b)
    ) / total
    kappa = 0.5 if phi.scalar_kind == "complex" else 1.0
    return MonteCarloEstimate(
        value=kappa * log_ratio,
        std_error=kappa * math.sqrt(max(var_log, 0.0)),
        samples=total,
    )


def degree_band(
    phi: NormOracle,
    psi: NormOracle,
    *,
    rng: np.random.Generator | None = None,
    monte_carlo: bool | None = None,
    surrogates: Surrogates | None = None,
) -> DegreeBand:
    """
    Band around the volume-ratio degree:
    [deg(φ_J, ψ_L) − r·ln r, deg(φ_L, ψ_J) + r·ln r], together with the
    certified interval obtained from the actual sandwich factors.
    """
    _check_same_space(phi, psi)
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    s = surrogates or fit_surrogates(phi, psi, rng=rng)
    r = phi.dim

    low, high = _outer_pairs(s)
    rigorous_lower = degree(low)
    rigorous_upper = degree(high)
    slack = r * math.log(r) if r > 1 else 0.0
    reported_lower = degree(HermitianPair(phi=s.phi_john.form, psi=s.psi_lowner.form)) - slack
    reported_upper = degree(HermitianPair(phi=s.phi_lowner.form, psi=s.psi_john.form)) + slack

    real_dim = r * (2 if phi.scalar_kind == "complex" else 1)
    use_mc = real_dim <= 4 if monte_carlo is None else monte_carlo
    estimate = monte_carlo_degree(phi, psi, rng=rng) if use_mc else None

    band = DegreeBand(
        lower=min(reported_lower, rigorous_lower),
        upper=max(reported_upper, rigorous_upper),
        rigorous_lower=rigorous_lower,
        rigorous_upper=rigorous_upper,
        budget=ErrorBudget(additive=slack, source="r_ln_r"),
        monte_carlo=estimate,
    )
    logger.debug(
        "degree band computed",
        extra={
            "event": "norms.degree_band.computed",
            "dim": r,
            "lower": band.rigorous_lower,
            "upper": band.rigorous_upper,
            "width": band.width,
        },
    )
    return band


class PolygonBand(NamedTuple):
    polygon: Polygon
    budget: ErrorBudget

    def half_width(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.budget.additive * np.asarray(t, dtype=np.float64)

    def lower(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.polygon.value(t) - self.half_width(t)

    def upper(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.polygon.value(t) + self.half_width(t)


def polygon_band(
    phi: NormOracle,
    psi: NormOracle,
    *,
    rng: np.random.Generator | None = None,
) -> PolygonBand:
    """
    Polygon of the John surrogate pair; the true polygon lies within
    ±(d(φ, φ_J) + d(ψ, ψ_J))·t of it.
    """
    _check_same_space(phi, psi)
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    phi_cert = john_form(phi, rng=rng)
    psi_cert = john_form(psi, rng=rng)
    pair = HermitianPair(phi=phi_cert.form, psi=psi_cert.form)
    budget = ErrorBudget(
        additive=phi_cert.distance + psi_cert.distance,
        source="john_surrogates",
    )
    return PolygonBand(polygon=polygon(pair), budget=budget)


@dataclass(frozen=True)
class DistanceInterval:
    lower: float
    upper: float

    def contains(self, value: float, *, tol: float = 1e-12) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def _probe_directions(dim: int, scalar_kind: str, rng: np.random.Generator) -> np.ndarray:
    eye = np.eye(dim)
    rows = [eye]
    for i in range(dim):
        for j in range(i + 1, dim):
            rows.append((eye[i] + eye[j]).reshape(1, -1))
            rows.append((eye[i] - eye[j]).reshape(1, -1))
    count = settings.AUDIT_DIRECTIONS
    if scalar_kind == "real":
        sampled = rng.standard_normal((count, dim))
    else:
        sampled = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return np.vstack([np.vstack(rows).astype(sampled.dtype), sampled])


def distance_estimate(
    n1: NormOracle,
    n2: NormOracle,
    *,
    rng: np.random.Generator | None = None,
) -> DistanceInterval:
    """
    Interval for d(n1, n2) = sup_x |ln(‖x‖₁/‖x‖₂)|.
    """
    _check_same_space(n1, n2)
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)

    xs = _probe_directions(n1.dim, n1.scalar_kind, rng)
    ratios = np.log(np.asarray(n1.evaluate(xs)) / np.asarray(n2.evaluate(xs)))
    lower = float(np.max(np.abs(ratios)))

    c1 = john_form(n1, rng=rng)
    c2 = john_form(n2, rng=rng)
    slopes = relative_spectrum(
        HermitianPair(phi=c1.centered_form(), psi=c2.centered_form())
    ).slopes
    upper = c1.centered_distance + float(np.max(np.abs(slopes))) + c2.centered_distance
    return DistanceInterval(lower=lower, upper=max(upper, lower))


@dataclass(frozen=True)
class FlagAdditivityReport:
    piece_bands: tuple[tuple[float, float], ...]
    sum_lower: float
    sum_upper: float
    degree_lower: float
    degree_upper: float
    width: float
    budget: ErrorBudget

    @property
    def within_budget(self) -> bool:
        return self.width <= self.budget.additive + 1e-6 * max(1, len(self.piece_bands))


def flag_additivity(
    phi: NormOracle,
    psi: NormOracle,
    flag: Flag,
    *,
    rng: np.random.Generator | None = None,
) -> FlagAdditivityReport:
    """
    Both deg(V; φ, ψ) and Σ_i deg(V_i/V_{i-1}; φ, ψ) lie in one certified
    interval, so their difference is at most its width (≤ r·ln r).
    """
    _check_same_space(phi, psi)
    if not flag.subspaces or flag.subspaces[-1].shape[1] != phi.dim:
        raise InvalidInput("Flag must end with the whole space.")
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    s = fit_surrogates(phi, psi, rng=rng)
    low, high = _outer_pairs(s)

    low_pieces = [degree(p) for p in subquotient_pairs(low, flag)]
    high_pieces = [degree(p) for p in subquotient_pairs(high, flag)]
    r = phi.dim
    report = FlagAdditivityReport(
        piece_bands=tuple(zip(low_pieces, high_pieces)),
        sum_lower=float(np.sum(low_pieces)),
        sum_upper=float(np.sum(high_pieces)),
        degree_lower=degree(low),
        degree_upper=degree(high),
        width=degree(high) - degree(low),
        budget=ErrorBudget(additive=r * math.log(r) if r > 1 else 0.0, source="flag_r_ln_r"),
    )
    logger.debug(
        "flag additivity checked",
        extra={
            "event": "norms.flag_additivity.checked",
            "dim": r,
            "rank": flag.length,
            "width": report.width,
        },
    )
    return report


@dataclass(frozen=True)
class TruncationCheck:
    target: float
    band: DegreeBand
    budget: float

    @property
    def deviation(self) -> float:
        return abs(self.band.midpoint - self.target)

    @property
    def passes(self) -> bool:
        return self.deviation <= self.budget + self.band.width


def truncation_check(
    pair: HermitianPair,
    a: float,
    *,
    rng: np.random.Generator | None = None,
) -> TruncationCheck:
    """
    Compare the degree band of (φ, ψ∨φ(a)) with Σ max(μ_i, a).
    """
    phi = HermitianNorm(pair.phi)
    truncated = max_combine(HermitianNorm(pair.psi), phi.scaled(a))
    band = degree_band(phi, truncated, rng=rng, monte_carlo=False)
    r = pair.dim
    budget = 2.0 * r * math.log(r) + 0.5 * r * math.log(2.0) if r > 1 else 0.5 * math.log(2.0)
    return TruncationCheck(target=truncated_degree(pair, a).value, band=band, budget=budget)
