from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidInput

logger = logging.getLogger(__name__)

# Continuous metrics on O(1) over ℙ^d, written as log-homogeneous functions
#   u(λX) = ln|λ| + u(X),
# so that ‖s‖_{nφ}(x) = |s(X)|·e^{−n·u(X)} does not depend on the representative.
# In the chart X_0 = 1 this is the usual weight u(z); in the chart X_j = 1 it is
# u(z) + ln|1/z_j|, which is the chart transition.

WeightKind = Literal["fubini-study", "max-log", "zero"]
Support = Literal["global", "unit-polydisc"]


@dataclass(frozen=True)
class Bump:
    """height·(1 − |z − center|²/radius²)₊² in the chart X_0 = 1."""

    center: tuple[complex, ...]
    height: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise InvalidInput("Bump radius must be positive.", details={"radius": self.radius})

    def __call__(self, points: np.ndarray) -> np.ndarray:
        x0 = points[:, 0]
        ok = np.abs(x0) > 1e-12
        out = np.zeros(points.shape[0])
        if not ok.any():
            return out
        z = points[ok, 1:] / x0[ok, None]
        c = np.asarray(self.center, dtype=np.complex128)
        if c.shape != (z.shape[1],):
            raise InvalidInput("Bump center has the wrong dimension.", details={"center": len(c)})
        s = np.sum(np.abs(z - c) ** 2, axis=1) / self.radius**2
        out[ok] = self.height * np.clip(1.0 - s, 0.0, None) ** 2
        return out

    def describe(self) -> dict:
        return {
            "center": [[c.real, c.imag] for c in self.center],
            "height": self.height,
            "radius": self.radius,
        }


class Weight(ABC):
    @abstractmethod
    def __call__(self, points: np.ndarray) -> np.ndarray:
        """u at homogeneous points, (m, d+1) → (m,)."""

    @property
    @abstractmethod
    def support(self) -> Support: ...

    @property
    @abstractmethod
    def torus_invariant(self) -> bool: ...

    @abstractmethod
    def describe(self) -> dict: ...

    def shifted(self, c: float) -> Weight:
        return OffsetWeight(self, c)

    def scaled(self, a: float) -> Weight:
        """φ(a): pointwise norms multiplied by e^a."""
        return OffsetWeight(self, -a)

    def norm_max(self, other: Weight) -> Weight:
        """Metric with pointwise norm max(‖·‖_self, ‖·‖_other)."""
        return EnvelopeWeight(self, other, "min")


@dataclass(frozen=True)
class MetricWeight(Weight):
    kind: WeightKind = "fubini-study"
    shift: float = 0.0
    scale: float = 0.0
    bumps: tuple[Bump, ...] = ()

    @property
    def support(self) -> Support:
        return "unit-polydisc" if self.kind == "zero" else "global"

    @property
    def torus_invariant(self) -> bool:
        return not self.bumps

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.complex128)
        absx = np.abs(pts)
        if self.kind == "fubini-study":
            u = 0.5 * np.log(np.sum(absx**2, axis=1))
        elif self.kind == "max-log":
            u = np.log(absx.max(axis=1))
        else:
            with np.errstate(divide="ignore"):
                u = np.log(absx[:, 0])
        u = u + self.shift - self.scale
        for bump in self.bumps:
            u = u + bump(pts)
        return u

    def shifted(self, c: float) -> MetricWeight:
        return replace(self, shift=self.shift + c)

    def scaled(self, a: float) -> MetricWeight:
        return replace(self, scale=self.scale + a)

    def describe(self) -> dict:
        out: dict = {"kind": self.kind, "shift": self.shift, "scale": self.scale}
        if self.bumps:
            out["bumps"] = [b.describe() for b in self.bumps]
        return out


@dataclass(frozen=True)
class OffsetWeight(Weight):
    base: Weight
    offset: float

    @property
    def support(self) -> Support:
        return self.base.support

    @property
    def torus_invariant(self) -> bool:
        return self.base.torus_invariant

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.base(points) + self.offset

    def describe(self) -> dict:
        return {"offset": self.offset, "base": self.base.describe()}


@dataclass(frozen=True)
class EnvelopeWeight(Weight):
    """Pointwise max or min of two weights."""

    left: Weight
    right: Weight
    mode: Literal["max", "min"] = "max"

    @property
    def support(self) -> Support:
        both = (self.left.support, self.right.support)
        return "global" if both == ("global", "global") else "unit-polydisc"

    @property
    def torus_invariant(self) -> bool:
        return self.left.torus_invariant and self.right.torus_invariant

    def __call__(self, points: np.ndarray) -> np.ndarray:
        op = np.maximum if self.mode == "max" else np.minimum
        return op(self.left(points), self.right(points))

    def describe(self) -> dict:
        return {"mode": self.mode, "left": self.left.describe(), "right": self.right.describe()}


def chart_consistency_gap(
    weight: Weight, d: int, rng: np.random.Generator, samples: int = 256
) -> float:
    """max |u(λX) − ln|λ| − u(X)| over random points and scalars."""
    pts = rng.standard_normal((samples, d + 1)) + 1j * rng.standard_normal((samples, d + 1))
    lam = np.exp(rng.uniform(-2.0, 2.0, samples) + 1j * rng.uniform(0, 2 * np.pi, samples))
    if weight.support != "global":
        pts[:, 0] = 1.0 + np.abs(pts[:, 0])
    a = weight(pts)
    b = weight(pts * lam[:, None]) - np.log(np.abs(lam))
    return float(np.max(np.abs(a - b)))


def check_weight(weight: Weight, d: int, rng: np.random.Generator) -> None:
    gap = chart_consistency_gap(weight, d, rng)
    if gap > settings.CHART_OVERLAP_TOL:
        raise InvalidInput(
            "Weight is inconsistent across charts.",
            details={"gap": gap, "tol": settings.CHART_OVERLAP_TOL},
        )
    logger.debug("weight checked", extra={"event": "linear_series.weight.checked", "width": gap})


def distortion_bound(u: Weight, v: Weight, n: int, points: np.ndarray) -> float:
    """n·max|u − v| on the grid; bounds d(φ_n, ψ_n) for sup norms on that grid."""
    diff = u(points) - v(points)
    finite = np.isfinite(diff)
    if not finite.any():
        return 0.0
    return float(n * np.max(np.abs(diff[finite])))
