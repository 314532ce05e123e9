from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import product
from typing import Literal

from app.core.errors import InvalidInput

OrderKind = Literal["grlex", "grevlex", "lex"]
ORDER_KINDS: tuple[OrderKind, ...] = ("grlex", "grevlex", "lex")

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class MonomialOrder:
    """
    Total order on ℕ^d compatible with addition, 0 minimal.
    Graded kinds compare total degree first.
    """

    kind: OrderKind
    d: int

    def __post_init__(self) -> None:
        if self.kind not in ORDER_KINDS:
            raise InvalidInput("Unknown monomial order.", details={"kind": self.kind})
        if self.d < 1:
            raise InvalidInput("Dimension must be positive.", details={"d": self.d})

    def key(self, alpha: Sequence[int]) -> tuple[int, ...]:
        a = tuple(int(x) for x in alpha)
        if len(a) != self.d:
            raise ValueError("EXPONENT_DIMENSION_MISMATCH")
        if self.kind == "lex":
            return a
        if self.kind == "grlex":
            return (sum(a), *a)
        # grevlex: larger degree wins, ties broken by the smallest last exponent
        return (sum(a), *(-x for x in reversed(a)))

    def sorted(self, exponents: Iterable[Sequence[int]]) -> list[Exponent]:
        return sorted((tuple(int(x) for x in e) for e in exponents), key=self.key)

    def less(self, alpha: Sequence[int], beta: Sequence[int]) -> bool:
        return self.key(alpha) < self.key(beta)


def monomial_basis(d: int, n: int, order: MonomialOrder | OrderKind = "grlex") -> list[Exponent]:
    """Exponents α ∈ ℕ^d with |α| ≤ n, i.e. the affine monomials of H⁰(ℙ^d, O(n))."""
    if n < 0:
        raise InvalidInput("Degree must be non-negative.", details={"n": n})
    mo = order if isinstance(order, MonomialOrder) else MonomialOrder(order, d)
    if mo.d != d:
        raise ValueError("ORDER_DIMENSION_MISMATCH")
    exps = [a for a in product(range(n + 1), repeat=d) if sum(a) <= n]
    return mo.sorted(exps)
