from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import scipy.linalg

from app.core.errors import DegenerateNorm, InvalidInput
from app.services.hermitian.forms import HermitianForm, ScalarKind

# General norms as oracles:
#   FunctionalFamily  ‖x‖ = max_j |ℓ_j(x)|
#   HermitianNorm     ‖x‖ = √(xᴴGx)
#   ScaledNorm        ‖x‖ = e^a·‖x‖_base
#   MaxNorm           ‖x‖ = max(‖x‖_l, ‖x‖_r)
# Every oracle exposes points of its polar unit ball (covectors p with
# |p·x| ≤ ‖x‖) and the exact supremum of ‖x‖/‖x‖_G for a Hermitian G.


@dataclass(frozen=True)
class DualPoints:
    """
    Covectors (rows) inside the polar unit ball.
    `exact` means their absolute convex hull is the whole polar ball.
    """

    points: np.ndarray
    exact: bool


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x)
    if arr.ndim == 1:
        return arr.reshape(1, -1), True
    return arr, False


def _unbatch(values: np.ndarray, single: bool) -> np.ndarray | float:
    return float(values[0]) if single else values


class NormOracle(ABC):
    kind: ClassVar[str]
    dim: int
    scalar_kind: ScalarKind

    @abstractmethod
    def _evaluate_batch(self, xs: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def dual_points(self, rng: np.random.Generator, *, samples: int) -> DualPoints: ...

    @abstractmethod
    def sup_ratio(self, form: HermitianForm) -> float:
        """sup_x ‖x‖ / ‖x‖_form, exact."""

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        xs, single = _as_batch(x)
        if xs.shape[1] != self.dim:
            raise InvalidInput("Vector has the wrong dimension.", details={"dim": xs.shape[1]})
        return _unbatch(self._evaluate_batch(xs), single)

    def __call__(self, x: np.ndarray) -> np.ndarray | float:
        return self.evaluate(x)

    def as_hermitian(self) -> HermitianForm | None:
        return None

    def scaled(self, a: float) -> ScaledNorm:
        return ScaledNorm(base=self, a=a)

    def max_with(self, other: NormOracle) -> MaxNorm:
        return MaxNorm(left=self, right=other)

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "scalar_kind": self.scalar_kind}


class FunctionalFamily(NormOracle):
    kind = "functional_family"

    def __init__(self, functionals: np.ndarray | list, *, scalar_kind: ScalarKind | None = None):
        arr = np.asarray(functionals)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InvalidInput("Functional family must be a non-empty matrix.")
        kind = scalar_kind or ("complex" if np.iscomplexobj(arr) else "real")
        arr = arr.astype(np.complex128 if kind == "complex" else np.float64)
        if np.linalg.matrix_rank(arr) < arr.shape[1]:
            raise DegenerateNorm(
                "Functionals do not span the dual space.",
                details={"functionals": arr.shape[0], "dim": arr.shape[1]},
            )
        self.functionals = arr
        self.dim = int(arr.shape[1])
        self.scalar_kind = kind

    def _evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.abs(xs @ self.functionals.T).max(axis=1)

    def dual_points(self, rng: np.random.Generator, *, samples: int) -> DualPoints:
        return DualPoints(points=self.functionals, exact=True)

    def sup_ratio(self, form: HermitianForm) -> float:
        solved = scipy.linalg.solve(form.gram, self.functionals.conj().T, assume_a="pos")
        values = np.real(np.sum(self.functionals * solved.T, axis=1))
        return float(np.sqrt(np.max(values)))

    def describe(self) -> dict:
        return {**super().describe(), "functionals": int(self.functionals.shape[0])}


class HermitianNorm(NormOracle):
    kind = "hermitian"

    def __init__(self, form: HermitianForm):
        self.form = form
        self.dim = form.dim
        self.scalar_kind = form.scalar_kind

    def _evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.form.norm(xs))

    def dual_points(self, rng: np.random.Generator, *, samples: int) -> DualPoints:
        r = self.dim
        if self.scalar_kind == "real":
            s = rng.standard_normal((samples, r))
        else:
            s = rng.standard_normal((samples, r)) + 1j * rng.standard_normal((samples, r))
        s /= np.linalg.norm(s, axis=1, keepdims=True)
        s = np.vstack([np.eye(r), s])
        # |(s Lᴴ)·x| = |s·(Lᴴx)| ≤ ‖x‖
        return DualPoints(points=s @ self.form.cholesky.conj().T, exact=False)

    def sup_ratio(self, form: HermitianForm) -> float:
        top = scipy.linalg.eigh(self.form.gram, form.gram, eigvals_only=True)[-1]
        return float(np.sqrt(top))

    def as_hermitian(self) -> HermitianForm:
        return self.form


class ScaledNorm(NormOracle):
    kind = "scaled"

    def __init__(self, base: NormOracle, a: float):
        self.base = base
        self.a = float(a)
        self.dim = base.dim
        self.scalar_kind = base.scalar_kind

    def _evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(self.a) * self.base._evaluate_batch(xs)

    def dual_points(self, rng: np.random.Generator, *, samples: int) -> DualPoints:
        inner = self.base.dual_points(rng, samples=samples)
        return DualPoints(points=np.exp(self.a) * inner.points, exact=inner.exact)

    def sup_ratio(self, form: HermitianForm) -> float:
        return float(np.exp(self.a) * self.base.sup_ratio(form))

    def as_hermitian(self) -> HermitianForm | None:
        inner = self.base.as_hermitian()
        return None if inner is None else inner.scaled(self.a)

    def describe(self) -> dict:
        return {**super().describe(), "a": self.a, "base": self.base.describe()}


class MaxNorm(NormOracle):
    kind = "max"

    def __init__(self, left: NormOracle, right: NormOracle):
        if left.dim != right.dim or left.scalar_kind != right.scalar_kind:
            raise InvalidInput("Max of norms on different spaces.")
        self.left = left
        self.right = right
        self.dim = left.dim
        self.scalar_kind = left.scalar_kind

    def _evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.maximum(self.left._evaluate_batch(xs), self.right._evaluate_batch(xs))

    def dual_points(self, rng: np.random.Generator, *, samples: int) -> DualPoints:
        lpts = self.left.dual_points(rng, samples=samples)
        rpts = self.right.dual_points(rng, samples=samples)
        return DualPoints(
            points=np.vstack([lpts.points, rpts.points]),
            exact=lpts.exact and rpts.exact,
        )

    def sup_ratio(self, form: HermitianForm) -> float:
        return max(self.left.sup_ratio(form), self.right.sup_ratio(form))

    def describe(self) -> dict:
        return {
            **super().describe(),
            "left": self.left.describe(),
            "right": self.right.describe(),
        }


def max_combine(left: NormOracle, right: NormOracle) -> MaxNorm:
    return MaxNorm(left=left, right=right)


def random_family(
    rng: np.random.Generator,
    dim: int,
    count: int,
    scalar_kind: ScalarKind = "real",
) -> FunctionalFamily:
    if scalar_kind == "real":
        arr = rng.standard_normal((count, dim))
    else:
        arr = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return FunctionalFamily(arr, scalar_kind=scalar_kind)
