from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidInput, NumericalFailure, SingularBasis
from app.services.ultrametric import linalg
from app.services.ultrametric.expressions import Dual, Tensor, UltraNorm
from app.services.ultrametric.fields import ValuedField, parse_rational
from app.services.ultrametric.linalg import Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UltraFlag:
    """V_i = span of the first dims[i] basis vectors; dims strictly increase to r."""

    basis: list[Vector]
    dims: tuple[int, ...]

    @classmethod
    def build(
        cls, field: ValuedField, basis: Sequence[Sequence[Any]], dims: Sequence[int]
    ) -> UltraFlag:
        rows = linalg.coerce_matrix(field, basis)
        r = len(rows)
        steps = tuple(int(d) for d in dims)
        if not steps or steps[-1] != r or any(b <= a for a, b in zip(steps, steps[1:])):
            raise InvalidInput(
                "Flag dimensions must increase strictly up to r.", details={"dims": steps}
            )
        if steps[0] <= 0 or linalg.rank(field, rows) != r:
            raise InvalidInput("Flag basis must be a basis of the space.", details={"dims": steps})
        return cls(basis=rows, dims=steps)

    def step(self, i: int) -> list[Vector]:
        return self.basis[: self.dims[i]]


@dataclass(frozen=True)
class AlphaCertificate:
    norm: UltraNorm
    basis: list[Vector]
    # α = base^{alpha_exponent}, alpha_exponent ≤ 0
    alpha_exponent: Fraction
    vector_exponents: list[Fraction]

    @property
    def field(self) -> ValuedField:
        return self.norm.field

    @property
    def alpha(self) -> float:
        return math.exp(float(self.alpha_exponent) * self.field.base_log)

    @property
    def orthogonal(self) -> bool:
        return self.alpha_exponent == 0

    def to_dict(self) -> dict:
        return {
            "alpha_exponent": [self.alpha_exponent.numerator, self.alpha_exponent.denominator],
            "alpha": self.alpha,
            "basis": [[self.field.encode(x) for x in v] for v in self.basis],
            "vector_exponents": [[e.numerator, e.denominator] for e in self.vector_exponents],
            "field": self.field.describe(),
        }


@dataclass(frozen=True)
class ProbeAudit:
    probes: int
    violations: int
    tight: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def certified_alpha(basis: Sequence[Sequence[Any]], norm: UltraNorm) -> AlphaCertificate:
    """
    α = (max_i ‖b_i^∨‖·‖b_i‖)⁻¹ from the dual basis under the dual norm.
    α = 1 exactly when the basis is orthogonal.
    """
    field = norm.field
    rows = linalg.coerce_matrix(field, basis)
    if len(rows) != norm.dim:
        raise SingularBasis("Basis size differs from the dimension.", details={"dim": norm.dim})
    dual_rows = linalg.inverse(field, linalg.from_columns(rows))
    dual = Dual(norm).diagonal
    primal = [norm.diagonal.exponent(b) for b in rows]
    worst = max(
        (dual.exponent(d) + e for d, e in zip(dual_rows, primal, strict=True)),
        default=Fraction(0),
    )
    cert = AlphaCertificate(
        norm=norm,
        basis=rows,
        alpha_exponent=Fraction(-worst),
        vector_exponents=[Fraction(e) for e in primal],
    )
    logger.debug(
        "alpha certified",
        extra={"event": "ultra.alpha.certified", "dim": norm.dim, "lower": float(-worst)},
    )
    return cert


def audit_certificate(
    cert: AlphaCertificate, rng: np.random.Generator, probes: int | None = None
) -> ProbeAudit:
    """‖Σλ_i b_i‖ ≥ α·max|λ_i|‖b_i‖ on random combinations, exactly."""
    field = cert.field
    count = probes if probes is not None else settings.ULTRA_PROBES
    diag = cert.norm.diagonal
    violations = tight = 0
    for _ in range(count):
        lam = [field.random_element(rng) for _ in cert.basis]
        if all(field.is_zero(c) for c in lam):
            continue
        x = [field.zero] * diag.dim
        for c, b in zip(lam, cert.basis, strict=True):
            x = [xi + c * bi for xi, bi in zip(x, b, strict=True)]
        lhs = diag.exponent(x)
        rhs = cert.alpha_exponent + max(
            field.abs_exponent(c) + e for c, e in zip(lam, cert.vector_exponents, strict=True)
        )
        if lhs < rhs:
            violations += 1
        elif lhs == rhs:
            tight += 1
    return ProbeAudit(probes=count, violations=violations, tight=tight)


def eps_orthogonalize(norm: UltraNorm, flag: UltraFlag, eps: Any) -> AlphaCertificate:
    """
    Basis compatible with the flag: each new vector is replaced by its
    residual against the span of the previous ones, using the exact distance
    minimizer, so the result is orthogonal.
    """
    eps_q = parse_rational(eps)
    if not 0 < eps_q < 1:
        raise InvalidInput("eps must lie in (0, 1).", details={"eps": str(eps_q)})
    field = norm.field
    diag = norm.diagonal
    chosen: list[Vector] = []
    for i in range(len(flag.dims)):
        for x in flag.step(i)[len(chosen) :]:
            if chosen:
                w0, _ = diag.residual(x, diag.reduce(chosen))
                x = [a - b for a, b in zip(x, w0, strict=True)]
            chosen.append(x)
    cert = certified_alpha(chosen, norm)
    # 1 − eps ≤ α ⇔ ln(1 − eps) ≤ α_exp·ln base
    if math.log(1 - float(eps_q)) > float(cert.alpha_exponent) * field.base_log:
        raise NumericalFailure(
            "Flag basis is not (1 - eps)-orthogonal.",
            details={"alpha_exponent": str(cert.alpha_exponent), "eps": str(eps_q)},
        )
    return cert


def tensor_alpha(left: AlphaCertificate, right: AlphaCertificate) -> AlphaCertificate:
    norm = Tensor(left.norm, right.norm)
    basis = [[x * y for x in b for y in c] for b in left.basis for c in right.basis]
    cert = certified_alpha(basis, norm)
    expected = left.alpha_exponent + right.alpha_exponent
    if cert.alpha_exponent != expected:
        raise NumericalFailure(
            "Tensor certificate does not multiply.",
            details={"expected": str(expected), "got": str(cert.alpha_exponent)},
        )
    logger.debug("tensor certificate", extra={"event": "ultra.alpha.tensor", "dim": norm.dim})
    return cert


@dataclass(frozen=True)
class HadamardReport:
    wedge_exponent: Fraction
    product_exponent: Fraction
    lower_exponent: Fraction | None

    @property
    def holds(self) -> bool:
        upper_ok = self.wedge_exponent <= self.product_exponent
        lower_ok = self.lower_exponent is None or self.wedge_exponent >= self.lower_exponent
        return upper_ok and lower_ok


def wedge_exponent(norm: UltraNorm, vectors: Sequence[Sequence[Any]]) -> Fraction:
    """Exponent of ‖e_1∧⋯∧e_r‖ for the determinant norm."""
    field = norm.field
    diag = norm.diagonal
    rows = linalg.coerce_matrix(field, vectors)
    lam = linalg.mat_mul(field, diag.coords_matrix, linalg.from_columns(rows))
    return Fraction(-linalg.valuation_of_det(field, lam)) + sum(diag.exponents, Fraction(0))


def hadamard_check(
    norm: UltraNorm, vectors: Sequence[Sequence[Any]], alpha_exponent: Any | None = None
) -> HadamardReport:
    field = norm.field
    rows = linalg.coerce_matrix(field, vectors)
    product = sum((Fraction(norm.diagonal.exponent(v)) for v in rows), Fraction(0))
    lower = None
    if alpha_exponent is not None:
        lower = len(rows) * parse_rational(alpha_exponent) + product
    return HadamardReport(
        wedge_exponent=wedge_exponent(norm, rows),
        product_exponent=product,
        lower_exponent=lower,
    )
