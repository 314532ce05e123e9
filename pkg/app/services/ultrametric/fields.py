from __future__ import annotations

import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, ClassVar

import numpy as np
from sympy import QQ, isprime, multiplicity
from sympy.polys.domains import Domain
from sympy.polys.fields import field as rational_function_field

from app.core.errors import InvalidInput

# Discretely valued fields with exact arithmetic.
#   |x| = base^{-v(x)}, base = p for ℚ with the p-adic valuation,
#   base = e for ℚ(T) with the T-adic valuation.
# Norm values are stored as exponents of `base`; `base_log` converts to ln.


def parse_rational(value: Any) -> Fraction:
    """Integer, Fraction or [numerator, denominator] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidInput("Rational must be an integer pair.", details={"value": list(value)})
        if int(value[1]) == 0:
            raise InvalidInput("Zero denominator.", details={"value": list(value)})
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, (float, bool)):
        raise InvalidInput("Exact fields do not accept floats.", details={"value": value})
    return Fraction(value)


class ValuedField(ABC):
    backend: ClassVar[str]
    base_log: float

    @abstractmethod
    def valuation(self, x: Any) -> int:
        """v(x); raises on zero."""

    @abstractmethod
    def coerce(self, value: Any) -> Any: ...

    @abstractmethod
    def random_element(self, rng: np.random.Generator) -> Any: ...

    @abstractmethod
    def encode(self, x: Any) -> Any: ...

    @abstractmethod
    def describe(self) -> dict: ...

    @property
    def zero(self) -> Any:
        return self.coerce(0)

    @property
    def one(self) -> Any:
        return self.coerce(1)

    def is_zero(self, x: Any) -> bool:
        return not x

    def abs_exponent(self, x: Any) -> float | Fraction:
        """Exponent e with |x| = base^e; -inf for zero."""
        if self.is_zero(x):
            return -math.inf
        return Fraction(-self.valuation(x))

    @abstractmethod
    def uniformizer(self) -> Any: ...

    @property
    @abstractmethod
    def domain(self) -> Domain:
        """sympy domain used for exact matrix work."""

    def to_domain(self, x: Any) -> Any:
        return x

    def from_domain(self, x: Any) -> Any:
        return x


class PAdicField(ValuedField):
    backend = "padic"

    def __init__(self, p: int):
        if not isprime(p):
            raise InvalidInput("p must be a prime.", details={"p": p})
        self.p = int(p)
        self.base_log = math.log(p)

    def _int_valuation(self, n: int) -> int:
        return int(multiplicity(self.p, n))

    def valuation(self, x: Fraction) -> int:
        q = Fraction(x)
        if q == 0:
            raise ValueError("VALUATION_OF_ZERO")
        return self._int_valuation(abs(q.numerator)) - self._int_valuation(q.denominator)

    def coerce(self, value: Any) -> Fraction:
        return parse_rational(value)

    def random_element(self, rng: np.random.Generator) -> Fraction:
        # numerator and denominator carry random powers of p
        num = int(rng.integers(-50, 51)) * self.p ** int(rng.integers(0, 3))
        den = int(rng.integers(1, 20)) * self.p ** int(rng.integers(0, 3))
        return Fraction(num, den)

    def encode(self, x: Fraction) -> list[int]:
        q = Fraction(x)
        return [q.numerator, q.denominator]

    def uniformizer(self) -> Fraction:
        return Fraction(self.p)

    @property
    def domain(self) -> Domain:
        return QQ

    def to_domain(self, x: Fraction) -> Any:
        q = Fraction(x)
        return QQ(q.numerator, q.denominator)

    def from_domain(self, x: Any) -> Fraction:
        return Fraction(int(x.numerator), int(x.denominator))

    def describe(self) -> dict:
        return {"backend": self.backend, "p": self.p}


class TAdicField(ValuedField):
    """ℚ(T) with v = ord_T; elements are sympy rational functions."""

    backend = "tadic"

    def __init__(self) -> None:
        self.field, self.T = rational_function_field("T", QQ)
        self.base_log = 1.0

    @staticmethod
    def _order(poly: Any) -> int:
        return min(m[0] for m in poly.monoms())

    def valuation(self, x: Any) -> int:
        if not x:
            raise ValueError("VALUATION_OF_ZERO")
        return self._order(x.numer) - self._order(x.denom)

    def _poly(self, coefficients: list) -> Any:
        out = self.field.zero
        for k, c in enumerate(coefficients):
            q = parse_rational(c)
            out += self.field.ground_new(QQ(q.numerator, q.denominator)) * self.T**k
        return out

    def coerce(self, value: Any) -> Any:
        if isinstance(value, dict):
            numer = self._poly(value.get("num", []))
            denom = self._poly(value.get("den", [1]))
            if not denom:
                raise InvalidInput("Zero denominator in rational function.")
            return numer / denom
        if hasattr(value, "numer") and hasattr(value, "denom"):
            return self.field(value)
        q = parse_rational(value)
        return self.field.ground_new(QQ(q.numerator, q.denominator))

    def random_element(self, rng: np.random.Generator) -> Any:
        shift = int(rng.integers(-2, 3))
        numer = self.field.zero
        for k in range(int(rng.integers(1, 3))):
            c = int(rng.integers(-5, 6))
            numer += self.field.ground_new(QQ(c)) * self.T**k
        denom = self.field.one + self.field.ground_new(QQ(int(rng.integers(-3, 4)))) * self.T
        return numer / denom * self.T**shift

    @staticmethod
    def _coefficients(poly: Any) -> list[list[int]]:
        degree = max((m[0] for m in poly.monoms()), default=-1)
        coeffs = [[0, 1] for _ in range(degree + 1)]
        for (k,), c in poly.terms():
            q = QQ.to_sympy(c)
            coeffs[k] = [int(q.p), int(q.q)]
        return coeffs

    def encode(self, x: Any) -> dict:
        return {"num": self._coefficients(x.numer), "den": self._coefficients(x.denom)}

    def uniformizer(self) -> Any:
        return self.T

    @property
    def domain(self) -> Domain:
        return self.field.to_domain()

    def describe(self) -> dict:
        return {"backend": self.backend}


def field_from_dict(data: dict) -> ValuedField:
    backend = data.get("backend", "padic")
    if backend == "padic":
        return PAdicField(int(data.get("p", 2)))
    if backend == "tadic":
        return TAdicField()
    raise InvalidInput("Unknown field backend.", details={"backend": backend})
