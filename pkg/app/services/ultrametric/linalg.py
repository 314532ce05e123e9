from __future__ import annotations

from collections.abc import Sequence
from typing import Any

from sympy.polys.matrices import DomainMatrix

from app.core.errors import SingularBasis
from app.services.ultrametric.fields import ValuedField

# Exact dense linear algebra over a ValuedField.
# Matrices are lists of rows; vectors are lists. Elimination runs on sympy
# DomainMatrix over the field domain (QQ or QQ(T)).

Matrix = list[list[Any]]
Vector = list[Any]


def coerce_matrix(field: ValuedField, rows: Sequence[Sequence[Any]]) -> Matrix:
    out = [[field.coerce(x) for x in row] for row in rows]
    if out and any(len(row) != len(out[0]) for row in out):
        raise ValueError("RAGGED_MATRIX")
    return out


def identity(field: ValuedField, n: int) -> Matrix:
    return [[field.one if i == j else field.zero for j in range(n)] for i in range(n)]


def transpose(m: Matrix) -> Matrix:
    return [list(col) for col in zip(*m, strict=True)] if m else []


def columns(m: Matrix) -> list[Vector]:
    return transpose(m)


def from_columns(cols: Sequence[Vector]) -> Matrix:
    return transpose([list(c) for c in cols])


def mat_vec(field: ValuedField, m: Matrix, v: Vector) -> Vector:
    out = []
    for row in m:
        acc = field.zero
        for a, b in zip(row, v, strict=True):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


def _to_domain_matrix(field: ValuedField, m: Matrix) -> DomainMatrix:
    rows = [[field.to_domain(x) for x in row] for row in m]
    width = len(rows[0]) if rows else 0
    return DomainMatrix(rows, (len(rows), width), field.domain)


def _from_domain_matrix(field: ValuedField, dm: DomainMatrix) -> Matrix:
    return [[field.from_domain(x) for x in row] for row in dm.to_list()]


def mat_mul(field: ValuedField, a: Matrix, b: Matrix) -> Matrix:
    if not a or not b or not b[0]:
        return [[] for _ in a]
    product = _to_domain_matrix(field, a) * _to_domain_matrix(field, b)
    return _from_domain_matrix(field, product)


def kron(field: ValuedField, a: Matrix, b: Matrix) -> Matrix:
    return [[x * y for x in ra for y in rb] for ra in a for rb in b]


def determinant(field: ValuedField, m: Matrix) -> Any:
    if len(m) == 0:
        return field.one
    if len(m) != len(m[0]):
        raise ValueError("DETERMINANT_OF_NON_SQUARE")
    return field.from_domain(_to_domain_matrix(field, m).det())


def rank(field: ValuedField, m: Matrix) -> int:
    if not m or not m[0]:
        return 0
    return int(_to_domain_matrix(field, m).rank())


def pivot_columns(field: ValuedField, m: Matrix) -> list[int]:
    if not m or not m[0]:
        return []
    _, pivots = _to_domain_matrix(field, m).rref()
    return list(pivots)


def inverse(field: ValuedField, m: Matrix) -> Matrix:
    n = len(m)
    if n == 0:
        return []
    if any(len(row) != n for row in m):
        raise SingularBasis("Basis matrix must be square.", details={"rows": n})
    dm = _to_domain_matrix(field, m)
    if not dm.det():
        raise SingularBasis("Basis matrix is singular.", details={"rank": int(dm.rank()), "dim": n})
    return _from_domain_matrix(field, dm.inv())


def solve(field: ValuedField, m: Matrix, v: Vector) -> Vector:
    return mat_vec(field, inverse(field, m), v)


def valuation_of_det(field: ValuedField, m: Matrix) -> int:
    det = determinant(field, m)
    if field.is_zero(det):
        raise SingularBasis("Basis matrix is singular.")
    return field.valuation(det)
