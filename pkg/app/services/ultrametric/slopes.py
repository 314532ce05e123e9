from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from app.core.errors import InvalidInput
from app.services.hermitian.pairs import Polygon, SlopeProfile
from app.services.ultrametric import linalg
from app.services.ultrametric.certificates import UltraFlag, wedge_exponent
from app.services.ultrametric.expressions import (
    Exponent,
    Max,
    Quotient,
    Restrict,
    Scale,
    UltraNorm,
    common_basis,
)
from app.services.ultrametric.fields import ValuedField, parse_rational
from app.services.ultrametric.linalg import Vector

logger = logging.getLogger(__name__)

# Slope theory of a pair of ultrametric norms. Every expression compiles to
# a diagonal norm and any two diagonal norms share an orthogonal basis, so
# degrees, slopes and truncations are exact rationals (times base_log).


@dataclass(frozen=True)
class UltraPair:
    phi: UltraNorm
    psi: UltraNorm

    def __post_init__(self) -> None:
        if self.phi.dim != self.psi.dim:
            raise InvalidInput(
                "Norms of a pair must have the same dimension.",
                details={"phi": self.phi.dim, "psi": self.psi.dim},
            )
        if self.phi.field is not self.psi.field:
            raise InvalidInput("Norms of a pair must live over the same field.")

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def field(self) -> ValuedField:
        return self.phi.field


@dataclass(frozen=True)
class UltraDegree:
    exponent: Fraction
    base_log: float

    @property
    def value(self) -> float:
        return float(self.exponent) * self.base_log


@dataclass(frozen=True)
class UltraSlopes:
    # descending exponents μ_i/base_log, basis orthogonal for both norms
    exponents: tuple[Fraction, ...]
    basis: list[Vector]
    base_log: float
    error_bound: float = 0.0

    @property
    def profile(self) -> SlopeProfile:
        return SlopeProfile(np.array([float(e) * self.base_log for e in self.exponents]))

    @property
    def polygon(self) -> Polygon:
        return Polygon.from_slopes(self.profile.slopes)

    def partial_sums(self) -> list[Fraction]:
        out = [Fraction(0)]
        for e in self.exponents:
            out.append(out[-1] + e)
        return out


def degree_ultra(pair: UltraPair) -> UltraDegree:
    """−ln‖e_1∧⋯∧e_r‖_φ + ln‖e_1∧⋯∧e_r‖_ψ on the standard basis."""
    field = pair.field
    if pair.dim == 0:
        return UltraDegree(exponent=Fraction(0), base_log=field.base_log)
    standard = linalg.identity(field, pair.dim)
    exp = wedge_exponent(pair.psi, standard) - wedge_exponent(pair.phi, standard)
    return UltraDegree(exponent=exp, base_log=field.base_log)


def _check_eps(eps: Any) -> Fraction:
    eps_q = parse_rational(eps)
    if not 0 < eps_q < 1:
        raise InvalidInput("eps must lie in (0, 1).", details={"eps": str(eps_q)})
    return eps_q


def slopes_ultra(pair: UltraPair, eps: Any = Fraction(1, 2)) -> UltraSlopes:
    """
    Slopes ln(‖e_i‖_ψ/‖e_i‖_φ) on a basis orthogonal for both norms.

    The basis is exactly orthogonal, so the error bound is zero for every eps.
    """
    _check_eps(eps)
    phi, psi = pair.phi.diagonal, pair.psi.diagonal
    basis = common_basis(phi, psi)
    ratios = [Fraction(psi.exponent(e) - phi.exponent(e)) for e in basis]
    order = sorted(range(len(basis)), key=lambda i: ratios[i], reverse=True)
    out = UltraSlopes(
        exponents=tuple(ratios[i] for i in order),
        basis=[basis[i] for i in order],
        base_log=pair.field.base_log,
    )
    logger.debug(
        "ultrametric slopes",
        extra={"event": "ultra.slopes.computed", "dim": pair.dim},
    )
    return out


def simultaneous_basis(pair: UltraPair) -> list[Vector]:
    return slopes_ultra(pair).basis


@dataclass(frozen=True)
class UltraTruncation:
    degree: UltraDegree
    legendre: UltraDegree
    threshold: Fraction

    @property
    def equal(self) -> bool:
        return self.degree.exponent == self.legendre.exponent


def truncate_ultra(pair: UltraPair, a: Any) -> UltraTruncation:
    """deg(φ, ψ∨φ(a)) next to Σ max(μ_i, a); the two agree exactly."""
    a_q = parse_rational(a)
    truncated = UltraPair(pair.phi, Max(pair.psi, Scale(pair.phi, a_q)))
    lhs = degree_ultra(truncated)
    slopes = slopes_ultra(pair)
    rhs = sum((max(mu, a_q) for mu in slopes.exponents), Fraction(0))
    return UltraTruncation(
        degree=lhs,
        legendre=UltraDegree(exponent=rhs, base_log=pair.field.base_log),
        threshold=a_q,
    )


def subspace_degree(pair: UltraPair, subspace: Sequence[Sequence[Any]]) -> UltraDegree:
    return degree_ultra(UltraPair(Restrict(pair.phi, subspace), Restrict(pair.psi, subspace)))


def subquotient_pairs(pair: UltraPair, flag: UltraFlag) -> list[UltraPair]:
    """(V_i/V_{i−1}) pairs, each in coordinates of the flag basis of V_i."""
    field = pair.field
    out = []
    previous = 0
    for i, d in enumerate(flag.dims):
        step = flag.step(i)
        unit = [[field.one if j == m else field.zero for j in range(d)] for m in range(previous)]
        phi = Quotient(Restrict(pair.phi, step), unit)
        psi = Quotient(Restrict(pair.psi, step), unit)
        out.append(UltraPair(phi, psi))
        previous = d
    return out


def flag_degrees(pair: UltraPair, flag: UltraFlag) -> list[UltraDegree]:
    return [degree_ultra(p) for p in subquotient_pairs(pair, flag)]


@dataclass(frozen=True)
class UltraDistance:
    exponent: Exponent
    minimizer: Vector
    base_log: float

    @property
    def value(self) -> float:
        return float(self.exponent) * self.base_log


def distance_to_subspace(
    norm: UltraNorm, x: Sequence[Any], subspace: Sequence[Sequence[Any]]
) -> UltraDistance:
    """Exact dist(x, W) = min_w ‖x − w‖ and a minimizer w₀."""
    field = norm.field
    diag = norm.diagonal
    xs = [field.coerce(v) for v in x]
    rows = linalg.coerce_matrix(field, subspace)
    if not rows:
        return UltraDistance(diag.exponent(xs), [field.zero] * norm.dim, field.base_log)
    w0, residual = diag.residual(xs, diag.reduce(rows))
    return UltraDistance(
        exponent=diag.weighted(residual),
        minimizer=w0,
        base_log=field.base_log,
    )
