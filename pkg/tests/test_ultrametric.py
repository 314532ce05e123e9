from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import InvalidInput, SingularBasis
from app.services.ultrametric import linalg
from app.services.ultrametric.certificates import (
    UltraFlag,
    audit_certificate,
    certified_alpha,
    eps_orthogonalize,
    hadamard_check,
    tensor_alpha,
)
from app.services.ultrametric.expressions import Diagonal, Dual, Max, Scale, norm_from_tree
from app.services.ultrametric.fields import PAdicField, TAdicField, parse_rational
from app.services.ultrametric.slopes import (
    UltraPair,
    degree_ultra,
    distance_to_subspace,
    flag_degrees,
    slopes_ultra,
    truncate_ultra,
)


def _random_basis(field: PAdicField, rng: np.random.Generator, r: int) -> list[list[Fraction]]:
    while True:
        rows = [[Fraction(int(rng.integers(-6, 7))) for _ in range(r)] for _ in range(r)]
        if linalg.determinant(field, rows) != 0:
            return rows


def _random_pair(rng: np.random.Generator, p: int = 3, r: int = 3) -> UltraPair:
    field = PAdicField(p)
    phi = Diagonal(
        field,
        _random_basis(field, rng, r),
        [Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(r)],
    )
    psi = Diagonal(
        field,
        _random_basis(field, rng, r),
        [Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(r)],
    )
    return UltraPair(phi, psi)


def test_diagonal_pair_has_exact_rational_slopes() -> None:
    field = PAdicField(3)
    pair = UltraPair(
        Diagonal.trivial(field, 2),
        Diagonal.standard(field, [2, [1, 2]]),
    )
    slopes = slopes_ultra(pair)
    assert slopes.exponents == (Fraction(2), Fraction(1, 2))
    assert slopes.error_bound == 0.0
    deg = degree_ultra(pair)
    assert deg.exponent == Fraction(5, 2)
    assert deg.value == pytest.approx(2.5 * math.log(3))
    assert slopes.partial_sums() == [Fraction(0), Fraction(2), Fraction(5, 2)]


def test_valuation_of_the_basis_enters_the_degree() -> None:
    field = PAdicField(2)
    # unit ball of ψ spanned by (2, 0), (0, 1), so ‖e_1‖_ψ = 2
    psi = Diagonal(field, [[2, 0], [0, 1]], [0, 0])
    deg = degree_ultra(UltraPair(Diagonal.trivial(field, 2), psi))
    assert deg.exponent == Fraction(1)
    assert slopes_ultra(UltraPair(Diagonal.trivial(field, 2), psi)).exponents == (1, 0)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_slopes_sum_to_degree(seed: int) -> None:
    pair = _random_pair(np.random.default_rng(seed))
    slopes = slopes_ultra(pair)
    assert sum(slopes.exponents, Fraction(0)) == degree_ultra(pair).exponent
    assert list(slopes.exponents) == sorted(slopes.exponents, reverse=True)
    assert slopes.polygon.is_concave()


@pytest.mark.parametrize("a", [-2, [-1, 3], 0, [5, 4], 7])
def test_truncation_degree_equals_legendre_sum(a) -> None:
    pair = _random_pair(np.random.default_rng(11))
    result = truncate_ultra(pair, a)
    assert result.equal
    assert result.threshold == parse_rational(a)


def test_common_basis_is_orthogonal_for_both_norms() -> None:
    pair = _random_pair(np.random.default_rng(5))
    basis = slopes_ultra(pair).basis
    assert certified_alpha(basis, pair.phi).orthogonal
    assert certified_alpha(basis, pair.psi).orthogonal


def test_certificate_audit_finds_no_violations(rng: np.random.Generator) -> None:
    field = PAdicField(2)
    norm = Diagonal.standard(field, [0, 1, [1, 2]])
    basis = [[1, 1, 0], [0, 1, 1], [0, 0, 1]]
    cert = certified_alpha(basis, norm)
    assert cert.alpha_exponent <= 0
    assert audit_certificate(cert, rng).passed
    report = hadamard_check(norm, basis, cert.alpha_exponent)
    assert report.holds


def test_singular_basis_is_rejected() -> None:
    field = PAdicField(5)
    with pytest.raises(SingularBasis):
        certified_alpha([[1, 2], [2, 4]], Diagonal.trivial(field, 2))


def test_tensor_certificate_multiplies() -> None:
    field = PAdicField(3)
    left = certified_alpha([[1, 0], [1, 3]], Diagonal.trivial(field, 2))
    right = certified_alpha([[1, 1], [0, 1]], Diagonal.standard(field, [1, 0]))
    cert = tensor_alpha(left, right)
    assert cert.alpha_exponent == left.alpha_exponent + right.alpha_exponent
    assert len(cert.basis) == 4


def test_orthogonalized_flag_basis_and_flag_additivity() -> None:
    pair = _random_pair(np.random.default_rng(8))
    field = pair.field
    flag = UltraFlag.build(field, [[1, 2, 0], [0, 1, 1], [1, 0, 1]], [1, 3])
    cert = eps_orthogonalize(pair.phi, flag, [1, 4])
    assert cert.orthogonal
    pieces = flag_degrees(pair, flag)
    assert sum((d.exponent for d in pieces), Fraction(0)) == degree_ultra(pair).exponent


def test_flag_dims_must_reach_the_dimension() -> None:
    with pytest.raises(InvalidInput):
        UltraFlag.build(PAdicField(2), [[1, 0], [0, 1]], [1])


def test_distance_to_subspace_is_attained() -> None:
    field = PAdicField(2)
    norm = Diagonal.trivial(field, 2)
    result = distance_to_subspace(norm, [1, 3], [[1, 1]])
    residual = [Fraction(1) - result.minimizer[0], Fraction(3) - result.minimizer[1]]
    assert norm.exponent(residual) == result.exponent
    # 1·(1, 1) leaves (0, 2), of size |2| = 1/2
    assert result.exponent == Fraction(-1)


def test_scale_max_and_dual_compose() -> None:
    field = PAdicField(2)
    base = Diagonal.standard(field, [0, 1])
    combined = Max(base, Scale(Diagonal.trivial(field, 2), [1, 2]))
    pair = UltraPair(Diagonal.trivial(field, 2), combined)
    assert slopes_ultra(pair).exponents == (Fraction(1), Fraction(1, 2))
    dual = Dual(base)
    assert dual.exponent([0, 1]) == Fraction(-1)


def test_norm_tree_roundtrips() -> None:
    field = PAdicField(3)
    tree = {"kind": "scale", "a": [1, 2], "child": {"kind": "diagonal", "exponents": [0, 1]}}
    norm = norm_from_tree(field, tree)
    again = norm_from_tree(field, norm.to_tree())
    assert again.exponent([1, 1]) == norm.exponent([1, 1]) == Fraction(3, 2)


def test_unknown_tree_node_is_rejected() -> None:
    with pytest.raises(InvalidInput):
        norm_from_tree(PAdicField(2), {"kind": "sum"})


def test_field_validation() -> None:
    with pytest.raises(InvalidInput):
        PAdicField(4)
    with pytest.raises(InvalidInput):
        parse_rational(0.5)
    with pytest.raises(InvalidInput):
        parse_rational([1, 0])
    with pytest.raises(InvalidInput):
        slopes_ultra(_random_pair(np.random.default_rng(0)), eps=1)


def test_t_adic_valuation_counts_powers_of_t() -> None:
    field = TAdicField()
    x = field.coerce({"num": [0, 0, 3], "den": [1, 1]})
    assert field.valuation(x) == 2
    assert field.abs_exponent(x) == -2
    pair = UltraPair(Diagonal.trivial(field, 2), Diagonal(field, [[x, 0], [0, 1]], [0, 0]))
    assert degree_ultra(pair).exponent == 2


def test_p_adic_valuation_of_rationals() -> None:
    field = PAdicField(5)
    assert field.valuation(Fraction(50, 27)) == 2
    assert field.valuation(Fraction(-3, 125)) == -3
    assert field.valuation(Fraction(7, 3)) == 0
    with pytest.raises(InvalidInput):
        PAdicField(9)
    with pytest.raises(InvalidInput):
        PAdicField(1)


@pytest.mark.parametrize("field", [PAdicField(3), TAdicField()], ids=["padic", "tadic"])
def test_exact_elimination(field) -> None:
    t = field.uniformizer()
    m = linalg.coerce_matrix(field, [[1, 2, 0], [3, 4, 0], [0, 1, 1]])
    m[2][0] = t
    inv = linalg.inverse(field, m)
    assert linalg.mat_mul(field, m, inv) == linalg.identity(field, 3)
    assert linalg.determinant(field, m) == field.coerce(-2)
    assert linalg.solve(field, m, [field.one, field.zero, field.zero]) == [r[0] for r in inv]

    low = linalg.coerce_matrix(field, [[1, 2, 3], [2, 4, 6], [0, 0, 1]])
    assert linalg.rank(field, low) == 2
    assert linalg.pivot_columns(field, low) == [0, 2]
    with pytest.raises(SingularBasis):
        linalg.inverse(field, low)


@pytest.mark.parametrize("p", [2, 5])
def test_dual_basis_has_the_same_alpha_under_the_dual_norm(p: int) -> None:
    rng = np.random.default_rng(p)
    for r in (2, 4, 6):
        pair = _random_pair(rng, p=p, r=r)
        field = pair.field
        for norm in (pair.phi, pair.psi):
            basis = _random_basis(field, rng, r)
            dual_basis = linalg.inverse(field, linalg.from_columns(basis))
            primal = certified_alpha(basis, norm)
            dual = certified_alpha(dual_basis, Dual(norm))
            assert dual.alpha_exponent == primal.alpha_exponent
            assert primal.alpha_exponent <= 0
