from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, ClassVar

from app.core.errors import InvalidInput, RankDeficient
from app.services.ultrametric import linalg
from app.services.ultrametric.fields import ValuedField, parse_rational
from app.services.ultrametric.linalg import Matrix, Vector

# Ultrametric norms as immutable expression trees. Every node compiles to a
# DiagonalNorm: a basis (b_j) and exact exponents γ_j with
#   ‖Σ λ_j b_j‖ = max_j |λ_j|·base^{γ_j}.
# Values are exponents of the field base; the zero vector has exponent -inf.
#
# Coordinates: restrict(W) lives on K^k through y ↦ Σ y_i w_i; quotient(W)
# lives on K^{r−k} through the unit vectors off the pivot columns of W.

Exponent = Fraction | float


def _max_exponent(values: Sequence[Exponent]) -> Exponent:
    return max(values, default=-math.inf)


@dataclass(frozen=True)
class Reduction:
    """Greedy orthogonalization of a subspace inside a DiagonalNorm."""

    # coords are λ-coordinates, ambient the same vectors in V, combos in terms of the input
    coords: list[Vector]
    ambient: list[Vector]
    combos: list[Vector]
    pivots: list[int]
    exponents: list[Fraction]


class DiagonalNorm:
    def __init__(
        self,
        field: ValuedField,
        vectors: Sequence[Sequence[Any]],
        exponents: Sequence[Any],
    ):
        vecs = [list(v) for v in vectors]
        if len(vecs) != len(exponents):
            raise InvalidInput(
                "Diagonal norm needs one exponent per basis vector.",
                details={"vectors": len(vecs), "exponents": len(exponents)},
            )
        if any(len(v) != len(vecs) for v in vecs):
            raise InvalidInput("Diagonal basis must be square.", details={"vectors": len(vecs)})
        self.field = field
        self.vectors = vecs
        self.exponents = [Fraction(e) for e in exponents]
        # coordinates λ = B⁻¹x, B with columns b_j; raises SingularBasis
        self.coords_matrix: Matrix = linalg.inverse(field, linalg.from_columns(vecs))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def coordinates(self, x: Vector) -> Vector:
        return linalg.mat_vec(self.field, self.coords_matrix, x)

    def weighted(self, lam: Vector) -> Exponent:
        return _max_exponent(
            [self.field.abs_exponent(c) + g for c, g in zip(lam, self.exponents, strict=True)]
        )

    def exponent(self, x: Vector) -> Exponent:
        if len(x) != self.dim:
            raise InvalidInput("Vector has the wrong dimension.", details={"dim": len(x)})
        return self.weighted(self.coordinates(x))

    def reduce(self, subspace: Sequence[Vector]) -> Reduction:
        """
        Orthogonal basis of span(subspace): repeatedly pick the entry of
        largest weighted size as pivot and clear its coordinate elsewhere.
        """
        field = self.field
        k = len(subspace)
        zs = [self.coordinates(list(w)) for w in subspace]
        ws = [list(w) for w in subspace]
        ts = [[field.one if i == j else field.zero for j in range(k)] for i in range(k)]
        remaining = list(range(k))
        out = Reduction(coords=[], ambient=[], combos=[], pivots=[], exponents=[])
        while remaining:
            best: tuple[Exponent, int, int] | None = None
            for i in remaining:
                for j, c in enumerate(zs[i]):
                    if field.is_zero(c):
                        continue
                    value = field.abs_exponent(c) + self.exponents[j]
                    if best is None or value > best[0]:
                        best = (value, i, j)
            if best is None:
                raise RankDeficient(
                    "Subspace vectors are linearly dependent.",
                    details={"vectors": k, "rank": len(out.pivots)},
                )
            value, i, j = best
            remaining.remove(i)
            lead = zs[i][j]
            for m in remaining:
                if field.is_zero(zs[m][j]):
                    continue
                c = zs[m][j] / lead
                zs[m] = [a - c * b for a, b in zip(zs[m], zs[i], strict=True)]
                ws[m] = [a - c * b for a, b in zip(ws[m], ws[i], strict=True)]
                ts[m] = [a - c * b for a, b in zip(ts[m], ts[i], strict=True)]
            out.coords.append(zs[i])
            out.ambient.append(ws[i])
            out.combos.append(ts[i])
            out.pivots.append(j)
            out.exponents.append(Fraction(value))
        return out

    def residual(self, x: Vector, reduction: Reduction) -> tuple[Vector, Vector]:
        """Exact minimizer w₀ of ‖x − w‖ over the subspace, and x − w₀ in λ-coords."""
        field = self.field
        lam = self.coordinates(x)
        w0 = [field.zero] * self.dim
        for z, amb, j in zip(reduction.coords, reduction.ambient, reduction.pivots, strict=True):
            if field.is_zero(lam[j]):
                continue
            c = lam[j] / z[j]
            lam = [a - c * b for a, b in zip(lam, z, strict=True)]
            w0 = [a + c * b for a, b in zip(w0, amb, strict=True)]
        return w0, lam


def _lift(field: ValuedField, combos: Sequence[Vector], basis: Sequence[Vector]) -> list[Vector]:
    return [linalg.mat_vec(field, linalg.from_columns(basis), list(c)) for c in combos]


def restrict_diagonal(norm: DiagonalNorm, subspace: Sequence[Vector]) -> DiagonalNorm:
    red = norm.reduce(subspace)
    return DiagonalNorm(norm.field, red.combos, red.exponents)


def complement_pivots(field: ValuedField, subspace: Sequence[Vector], dim: int) -> list[int]:
    pivots = set(linalg.pivot_columns(field, [list(w) for w in subspace]))
    return [i for i in range(dim) if i not in pivots]


def quotient_projection(field: ValuedField, subspace: Sequence[Vector], dim: int) -> Matrix:
    """Matrix π with x − Σ (πx)_m e_{l_m} ∈ span(subspace)."""
    free = complement_pivots(field, subspace, dim)
    unit = [[field.one if i == m else field.zero for i in range(dim)] for m in free]
    full_inv = linalg.inverse(field, linalg.from_columns([list(w) for w in subspace] + unit))
    return full_inv[len(subspace) :]


def quotient_diagonal(norm: DiagonalNorm, subspace: Sequence[Vector]) -> DiagonalNorm:
    field = norm.field
    red = norm.reduce(subspace)
    pi = quotient_projection(field, subspace, norm.dim)
    kept = [j for j in range(norm.dim) if j not in set(red.pivots)]
    vectors = [linalg.mat_vec(field, pi, norm.vectors[j]) for j in kept]
    return DiagonalNorm(field, vectors, [norm.exponents[j] for j in kept])


def dual_diagonal(norm: DiagonalNorm) -> DiagonalNorm:
    # dual basis b_j^∨ = rows of B⁻¹
    return DiagonalNorm(norm.field, norm.coords_matrix, [-g for g in norm.exponents])


def tensor_diagonal(left: DiagonalNorm, right: DiagonalNorm) -> DiagonalNorm:
    field = left.field
    vectors = [[x * y for x in b for y in c] for b in left.vectors for c in right.vectors]
    exps = [g + d for g in left.exponents for d in right.exponents]
    return DiagonalNorm(field, vectors, exps)


def common_basis(n1: DiagonalNorm, n2: DiagonalNorm) -> list[Vector]:
    """
    Basis orthogonal for both norms.

    The first vector minimizes ‖x‖₂/‖x‖₁, which is attained on the basis of
    n2. Its n1-orthogonal complement (drop the pivot vector of n1) is then
    orthogonal to it for n2 as well; recurse on the restrictions.
    """
    field = n1.field
    r = n1.dim
    if r == 0:
        return []
    ratios = [g - n1.exponent(c) for c, g in zip(n2.vectors, n2.exponents, strict=True)]
    j0 = min(range(r), key=lambda j: ratios[j])
    first = list(n2.vectors[j0])
    if r == 1:
        return [first]
    lam = n1.coordinates(first)
    weights = [field.abs_exponent(c) + g for c, g in zip(lam, n1.exponents, strict=True)]
    i0 = max(range(r), key=lambda i: weights[i])
    complement = [n1.vectors[i] for i in range(r) if i != i0]
    inner = common_basis(restrict_diagonal(n1, complement), restrict_diagonal(n2, complement))
    return [first, *_lift(field, inner, complement)]


def max_diagonal(n1: DiagonalNorm, n2: DiagonalNorm) -> DiagonalNorm:
    basis = common_basis(n1, n2)
    exps = [max(n1.exponent(e), n2.exponent(e)) for e in basis]
    return DiagonalNorm(n1.field, basis, exps)


# ---------------------------------------------------------------------------
# expression nodes


class UltraNorm(ABC):
    kind: ClassVar[str]
    field: ValuedField
    dim: int

    @abstractmethod
    def _compile(self) -> DiagonalNorm: ...

    @abstractmethod
    def to_tree(self) -> dict: ...

    @cached_property
    def diagonal(self) -> DiagonalNorm:
        return self._compile()

    def exponent(self, x: Sequence[Any]) -> Exponent:
        return self.diagonal.exponent([self.field.coerce(v) for v in x])

    def log_value(self, x: Sequence[Any]) -> float:
        return float(self.exponent(x)) * self.field.base_log

    def scaled(self, a: Any) -> Scale:
        return Scale(self, a)

    def max_with(self, other: UltraNorm) -> Max:
        return Max(self, other)


def _check_same_space(left: UltraNorm, right: UltraNorm) -> None:
    if left.dim != right.dim:
        raise InvalidInput(
            "Norms live on spaces of different dimension.",
            details={"left": left.dim, "right": right.dim},
        )


def _encode_matrix(field: ValuedField, rows: Sequence[Vector]) -> list:
    return [[field.encode(x) for x in row] for row in rows]


def _encode_rational(q: Fraction) -> list[int]:
    return [q.numerator, q.denominator]


class Diagonal(UltraNorm):
    kind = "diagonal"

    def __init__(
        self, field: ValuedField, basis: Sequence[Sequence[Any]], exponents: Sequence[Any]
    ):
        self.field = field
        self.basis = linalg.coerce_matrix(field, basis)
        self.exponents = [parse_rational(e) for e in exponents]
        self.dim = len(self.basis)
        _ = self.diagonal

    @classmethod
    def standard(cls, field: ValuedField, exponents: Sequence[Any]) -> Diagonal:
        return cls(field, linalg.identity(field, len(exponents)), exponents)

    @classmethod
    def trivial(cls, field: ValuedField, dim: int) -> Diagonal:
        return cls.standard(field, [0] * dim)

    def _compile(self) -> DiagonalNorm:
        return DiagonalNorm(self.field, self.basis, self.exponents)

    def to_tree(self) -> dict:
        return {
            "kind": self.kind,
            "basis": _encode_matrix(self.field, self.basis),
            "exponents": [_encode_rational(e) for e in self.exponents],
        }


class Scale(UltraNorm):
    kind = "scale"

    def __init__(self, child: UltraNorm, a: Any):
        self.child = child
        self.a = parse_rational(a)
        self.field = child.field
        self.dim = child.dim

    def _compile(self) -> DiagonalNorm:
        inner = self.child.diagonal
        return DiagonalNorm(self.field, inner.vectors, [g + self.a for g in inner.exponents])

    def exponent(self, x: Sequence[Any]) -> Exponent:
        return self.child.exponent(x) + self.a

    def to_tree(self) -> dict:
        return {"kind": self.kind, "child": self.child.to_tree(), "a": _encode_rational(self.a)}


class Max(UltraNorm):
    kind = "max"

    def __init__(self, left: UltraNorm, right: UltraNorm):
        _check_same_space(left, right)
        self.left = left
        self.right = right
        self.field = left.field
        self.dim = left.dim

    def _compile(self) -> DiagonalNorm:
        return max_diagonal(self.left.diagonal, self.right.diagonal)

    def exponent(self, x: Sequence[Any]) -> Exponent:
        return max(self.left.exponent(x), self.right.exponent(x))

    def to_tree(self) -> dict:
        return {"kind": self.kind, "left": self.left.to_tree(), "right": self.right.to_tree()}


class Restrict(UltraNorm):
    kind = "restrict"

    def __init__(self, child: UltraNorm, subspace: Sequence[Sequence[Any]]):
        self.child = child
        self.field = child.field
        self.subspace = linalg.coerce_matrix(self.field, subspace)
        if any(len(w) != child.dim for w in self.subspace):
            raise InvalidInput("Subspace vectors have the wrong dimension.")
        self.dim = len(self.subspace)

    def _compile(self) -> DiagonalNorm:
        return restrict_diagonal(self.child.diagonal, self.subspace)

    def exponent(self, x: Sequence[Any]) -> Exponent:
        y = [self.field.coerce(v) for v in x]
        x = linalg.mat_vec(self.field, linalg.from_columns(self.subspace), y)
        return self.child.exponent(x)

    def to_tree(self) -> dict:
        return {
            "kind": self.kind,
            "child": self.child.to_tree(),
            "subspace": _encode_matrix(self.field, self.subspace),
        }


class Quotient(UltraNorm):
    kind = "quotient"

    def __init__(self, child: UltraNorm, subspace: Sequence[Sequence[Any]]):
        self.child = child
        self.field = child.field
        self.subspace = linalg.coerce_matrix(self.field, subspace)
        if any(len(w) != child.dim for w in self.subspace):
            raise InvalidInput("Subspace vectors have the wrong dimension.")
        self.dim = child.dim - len(self.subspace)

    def lift(self, y: Sequence[Any]) -> Vector:
        """Representative Σ y_m e_{l_m} of the class with coordinates y."""
        free = complement_pivots(self.field, self.subspace, self.child.dim)
        x = [self.field.zero] * self.child.dim
        for m, l in enumerate(free):
            x[l] = self.field.coerce(y[m])
        return x

    def _compile(self) -> DiagonalNorm:
        return quotient_diagonal(self.child.diagonal, self.subspace)

    def to_tree(self) -> dict:
        return {
            "kind": self.kind,
            "child": self.child.to_tree(),
            "subspace": _encode_matrix(self.field, self.subspace),
        }


class Dual(UltraNorm):
    kind = "dual"

    def __init__(self, child: UltraNorm):
        self.child = child
        self.field = child.field
        self.dim = child.dim

    def _compile(self) -> DiagonalNorm:
        return dual_diagonal(self.child.diagonal)

    def to_tree(self) -> dict:
        return {"kind": self.kind, "child": self.child.to_tree()}


class Tensor(UltraNorm):
    kind = "tensor"

    def __init__(self, left: UltraNorm, right: UltraNorm):
        self.left = left
        self.right = right
        self.field = left.field
        self.dim = left.dim * right.dim

    def _compile(self) -> DiagonalNorm:
        return tensor_diagonal(self.left.diagonal, self.right.diagonal)

    def to_tree(self) -> dict:
        return {"kind": self.kind, "left": self.left.to_tree(), "right": self.right.to_tree()}


def norm_from_tree(field: ValuedField, tree: dict) -> UltraNorm:
    kind = tree.get("kind")
    try:
        match kind:
            case "diagonal":
                basis = tree.get("basis")
                if basis is None:
                    return Diagonal.standard(field, tree["exponents"])
                return Diagonal(field, basis, tree["exponents"])
            case "scale":
                return Scale(norm_from_tree(field, tree["child"]), tree["a"])
            case "max":
                return Max(
                    norm_from_tree(field, tree["left"]), norm_from_tree(field, tree["right"])
                )
            case "restrict":
                return Restrict(norm_from_tree(field, tree["child"]), tree["subspace"])
            case "quotient":
                return Quotient(norm_from_tree(field, tree["child"]), tree["subspace"])
            case "dual":
                return Dual(norm_from_tree(field, tree["child"]))
            case "tensor":
                return Tensor(
                    norm_from_tree(field, tree["left"]), norm_from_tree(field, tree["right"])
                )
    except KeyError as exc:
        raise InvalidInput(
            "Norm tree node is missing a field.", details={"kind": kind, "field": str(exc)}
        ) from exc
    raise InvalidInput("Unknown norm tree node.", details={"kind": kind})
