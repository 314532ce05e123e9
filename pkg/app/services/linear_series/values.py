from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.core.errors import InvalidInput
from app.services.hermitian.forms import HermitianForm
from app.services.linear_series.backends import ProjectiveBackend
from app.services.linear_series.norm_systems import SampledSupNorm, sup_surrogate
from app.services.norms.ellipsoids import design_form
from app.services.norms.oracles import NormOracle
from app.services.okounkov.orders import Exponent, MonomialOrder
from app.services.okounkov.semigroup import ValueTable

logger = logging.getLogger(__name__)

ValueMethod = Literal["hermitian", "surrogate", "monomial"]

# Okounkov values of a normed graded series:
#   Φ(n, α) = −ln ‖s_{(n,α)}‖_quot,  the quotient norm of the section with leading
#   exponent α modulo the sections whose leading exponent comes later in the order.


@dataclass(frozen=True)
class LevelValues:
    n: int
    leading: list[Exponent]
    values: np.ndarray
    # |Φ − Φ_exact| ≤ budget on every entry
    budget: float
    method: ValueMethod


def quotient_distances(
    form: HermitianForm, sections: np.ndarray, keys: Sequence[tuple]
) -> np.ndarray:
    """
    dist(s_k, span{s_l : keys[l] > keys[k]}) for each section row, read off the
    Cholesky diagonal of the Gram taken in decreasing key order.
    """
    if sections.shape[0] != len(keys):
        raise InvalidInput("Every section needs an order key.")
    perm = sorted(range(len(keys)), key=lambda i: keys[i], reverse=True)
    gram = form.congruence(np.asarray(sections)[perm].T)
    out = np.empty(len(keys))
    out[perm] = np.abs(np.diag(gram.cholesky))
    return out


def _norm_dim(norm: HermitianForm | SampledSupNorm | NormOracle) -> int:
    if isinstance(norm, SampledSupNorm):
        return norm.oracle.dim
    return norm.dim


def _surrogate_form(
    norm: SampledSupNorm | NormOracle, rng: np.random.Generator | None
) -> tuple[HermitianForm, float]:
    if isinstance(norm, SampledSupNorm):
        cert = sup_surrogate(norm, rng=rng)
    else:
        cert = design_form(norm, rng=rng)
    return cert.centered_form(), cert.centered_distance


def gr_quotient_values(
    backend: ProjectiveBackend,
    norm: HermitianForm | SampledSupNorm | NormOracle,
    order: MonomialOrder,
    *,
    sections: np.ndarray | None = None,
    leading: Sequence[Exponent] | None = None,
    level: int | None = None,
    exact_monomials: bool = False,
    rng: np.random.Generator | None = None,
) -> LevelValues:
    """
    Φ(n, α) for the sections of one level. Without `sections` the monomial basis
    is used, whose leading exponents are the monomials themselves. Sections are
    coordinate rows against the basis the norm lives on.

    Hermitian norms give exact values. Oracle norms go through a centered
    Hermitian surrogate and record its distance as the budget. With
    `exact_monomials` a sampled sup norm of a torus-invariant weight is read
    directly: monomials are then orthogonal for it, so the quotient norm of z^α
    is its own norm.
    """
    n = backend.n if level is None else level
    if sections is None:
        sections = np.eye(backend.dim, dtype=np.complex128)
        leading = list(backend.exponents)
    elif leading is None or len(leading) != sections.shape[0]:
        raise InvalidInput("Sections need one leading exponent each.")
    leading = [tuple(int(x) for x in a) for a in leading]
    dim = _norm_dim(norm)
    if sections.shape[1] != dim:
        raise InvalidInput("Sections have the wrong dimension.", details={"dim": dim})

    if exact_monomials:
        if not isinstance(norm, SampledSupNorm):
            raise InvalidInput("Exact monomial values need a sampled sup norm.")
        positions = [backend.index(a) for a in leading]
        if not np.allclose(sections, np.eye(backend.dim)[positions]):
            raise InvalidInput("Exact monomial values need the monomial basis.")
        values = -norm.log_section_norms[positions]
        result = LevelValues(n, leading, values, 0.0, "monomial")
    else:
        if isinstance(norm, HermitianForm):
            form, budget, method = norm, 0.0, "hermitian"
        else:
            form, budget = _surrogate_form(norm, rng)
            method = "surrogate"
        keys = [order.key(a) for a in leading]
        values = -np.log(quotient_distances(form, sections, keys))
        result = LevelValues(n, leading, values, budget, method)
    logger.debug(
        "graded quotient values",
        extra={
            "event": "linear_series.values.computed",
            "n": n,
            "dim": len(leading),
            "width": result.budget,
            "outcome": result.method,
        },
    )
    return result


def value_table(levels: Iterable[LevelValues], d: int) -> ValueTable:
    """
    Table over the given levels plus Γ_0 = {0} with Φ(0, 0) = 0. The slack covers
    the three entries of each superadditivity check.
    """
    levels = list(levels)
    entries = [(0, (0,) * d, 0.0)]
    for lvl in levels:
        entries.extend(
            (lvl.n, alpha, float(v)) for alpha, v in zip(lvl.leading, lvl.values, strict=True)
        )
    budget = max((lvl.budget for lvl in levels), default=0.0)
    return ValueTable.from_entries(d, entries, slack=1e-9 + 3.0 * budget)


def schwarz_constant(table: ValueTable) -> float:
    """Smallest C ≥ 0 with Φ(n, α) ≥ −C·n on every sampled level n ≥ 1."""
    worst = min(
        (float(np.min(table.ratios(n))) for n, _ in table.sample.points(1)), default=0.0
    )
    return max(0.0, -worst)
