from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from app.core.errors import InvalidInput
from app.services.okounkov.orders import Exponent, MonomialOrder, monomial_basis

Variety = Literal["P1", "P2"]
VARIETY_DIMS: dict[str, int] = {"P1": 1, "P2": 2}


@dataclass(frozen=True)
class ProjectiveBackend:
    """
    H⁰(ℙ^d, O(n)) with the affine monomial basis z^α, |α| ≤ n, z_i = X_i/X_0.
    Points are homogeneous representatives X ∈ ℂ^{d+1}.
    """

    variety: Variety
    n: int

    def __post_init__(self) -> None:
        if self.variety not in VARIETY_DIMS:
            raise InvalidInput("Unknown variety.", details={"variety": self.variety})
        if self.n < 0:
            raise InvalidInput("Tensor power must be non-negative.", details={"n": self.n})

    @property
    def d(self) -> int:
        return VARIETY_DIMS[self.variety]

    @cached_property
    def exponents(self) -> list[Exponent]:
        return monomial_basis(self.d, self.n, MonomialOrder("grlex", self.d))

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def at(self, n: int) -> ProjectiveBackend:
        return ProjectiveBackend(self.variety, n)

    @cached_property
    def homogeneous_exponents(self) -> np.ndarray:
        """(dim, d+1) exponents of X_0^{n−|α|} X^α."""
        alpha = np.asarray(self.exponents, dtype=np.int64).reshape(-1, self.d)
        return np.hstack([self.n - alpha.sum(axis=1, keepdims=True), alpha])

    def index(self, alpha: Exponent) -> int:
        return self.exponents.index(tuple(alpha))

    def monomials(self, points: np.ndarray) -> np.ndarray:
        """(m, dim) values X^e of the basis at homogeneous points."""
        pts = np.asarray(points, dtype=np.complex128)
        out = np.ones((pts.shape[0], self.dim), dtype=np.complex128)
        e = self.homogeneous_exponents
        for i in range(self.d + 1):
            out *= pts[:, i : i + 1] ** e[None, :, i]
        return out

    def log_abs_monomials(self, points: np.ndarray) -> np.ndarray:
        """(m, dim) ln|X^e|, −inf where a zero coordinate carries a positive exponent."""
        pts = np.asarray(points, dtype=np.complex128)
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(pts))
        e = self.homogeneous_exponents.astype(np.float64)
        out = np.zeros((pts.shape[0], self.dim))
        for i in range(self.d + 1):
            col = logs[:, i : i + 1]
            term = np.where(e[None, :, i] == 0, 0.0, e[None, :, i] * col)
            out += term
        return out

    def coefficient_array(self, coefficients: np.ndarray) -> np.ndarray:
        """Coefficient vector as a dense (n+1)^d array indexed by α."""
        arr = np.zeros((self.n + 1,) * self.d, dtype=np.complex128)
        for c, alpha in zip(coefficients, self.exponents, strict=True):
            arr[alpha] = c
        return arr

    def from_coefficient_array(self, arr: np.ndarray) -> np.ndarray:
        return np.array([arr[alpha] for alpha in self.exponents], dtype=np.complex128)


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Scale each homogeneous representative to max |X_i| = 1."""
    pts = np.asarray(points, dtype=np.complex128)
    scale = np.abs(pts).max(axis=1, keepdims=True)
    if np.any(scale == 0):
        raise InvalidInput("The zero vector is not a projective point.")
    return pts / scale


def chart_points(d: int, chart: int, coords: np.ndarray) -> np.ndarray:
    """Homogeneous points with X_chart = 1 and the other coordinates from `coords`."""
    c = np.asarray(coords, dtype=np.complex128).reshape(-1, d)
    out = np.ones((c.shape[0], d + 1), dtype=np.complex128)
    others = [i for i in range(d + 1) if i != chart]
    out[:, others] = c
    return out
