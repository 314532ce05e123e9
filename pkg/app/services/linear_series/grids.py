from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from itertools import product
from typing import Literal

import numpy as np

from app.core.config import settings
from app.core.errors import QuadratureResolutionError
from app.services.linear_series.backends import ProjectiveBackend, chart_points, normalize_points
from app.services.linear_series.weights import Weight

# Sample grids for sup norms and quadrature rules for L² norms on ℙ^d.
# The chart X_j = 1 carries coordinates c ∈ ℂ^d; its unit polydisc is the
# region where |X_j| is the largest coordinate, so these regions tile ℙ^d.

MeasureKind = Literal["fubini-study", "circle"]


def _axis_samples(radius: float, radial: int, angular: int) -> np.ndarray:
    radii = np.linspace(0.0, radius, radial)[1:]
    angles = 2.0 * np.pi * np.arange(angular) / angular
    ring = (radii[:, None] * np.exp(1j * angles)[None, :]).reshape(-1)
    return np.concatenate([[0.0 + 0.0j], ring])


@dataclass(frozen=True)
class PointGrid:
    d: int
    radius: float
    radial: int
    angular: int
    charts: tuple[int, ...]

    @cached_property
    def points(self) -> np.ndarray:
        """Homogeneous points, max |X_i| = 1."""
        axis = _axis_samples(self.radius, self.radial, self.angular)
        coords = np.array(list(product(axis, repeat=self.d)), dtype=np.complex128)
        blocks = [chart_points(self.d, j, coords) for j in self.charts]
        return normalize_points(np.vstack(blocks))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def refined(self) -> PointGrid:
        """Twice the radial and angular resolution."""
        return replace(self, radial=2 * self.radial - 1, angular=2 * self.angular)


def sup_grid(
    backend: ProjectiveBackend,
    weight: Weight,
    *,
    radial: int | None = None,
    angular: int | None = None,
) -> PointGrid:
    """
    Default grid for the sup norm of H⁰(O(n)). Monomial norms peak on shells
    of relative width ~ 1/√n, so on ℙ¹ the radial count grows with √n.
    """
    d = backend.d
    if weight.support == "global":
        charts, radius = tuple(range(d + 1)), settings.P1_CHART_RADIUS
    else:
        charts, radius = (0,), 1.0
    if d == 1:
        base_r, base_a = settings.GRID_RADIAL, settings.GRID_ANGULAR
    else:
        side = max(2, math.isqrt(settings.P2_GRID_CAP))
        base_r, base_a = side, side
    # ℙ² relies on the local polish of each section instead
    factor = max(1, math.ceil(math.sqrt(backend.n / 4.0))) if d == 1 else 1
    return PointGrid(
        d=d,
        radius=radius,
        radial=radial or base_r * factor,
        angular=angular or base_a,
        charts=charts,
    )


@dataclass(frozen=True)
class QuadratureMeasure:
    points: np.ndarray
    weights: np.ndarray
    kind: MeasureKind
    radial: int
    angular: int

    def __post_init__(self) -> None:
        if np.any(self.weights <= 0):
            raise QuadratureResolutionError("Quadrature weights must be positive.")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-10:
            raise QuadratureResolutionError(
                "Quadrature mass differs from 1.", details={"mass": total, "kind": self.kind}
            )

    @property
    def d(self) -> int:
        return int(self.points.shape[1] - 1)

    def refined(self) -> QuadratureMeasure:
        return quadrature(self.d, self.kind, radial=2 * self.radial, angular=2 * self.angular)


def _axis_rule(radial: int, angular: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit disc: Gauss–Legendre in r (with the Jacobian r) times trapezoid in θ."""
    x, w = np.polynomial.legendre.leggauss(radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    angles = 2.0 * np.pi * np.arange(angular) / angular
    nodes = (r[:, None] * np.exp(1j * angles)[None, :]).reshape(-1)
    weights = np.repeat(wr, angular) * (2.0 * np.pi / angular)
    return nodes, weights


def quadrature(
    d: int,
    kind: MeasureKind = "fubini-study",
    *,
    radial: int | None = None,
    angular: int | None = None,
) -> QuadratureMeasure:
    if d == 1:
        nr, na = radial or settings.QUAD_RADIAL, angular or settings.QUAD_ANGULAR
    else:
        nr, na = radial or settings.P2_QUAD_RADIAL, angular or settings.P2_QUAD_ANGULAR
    if kind == "circle":
        # uniform on the torus |z_i| = 1 of the chart X_0 = 1
        ring = np.exp(2j * np.pi * np.arange(na) / na)
        coords = np.array(list(product(ring, repeat=d)), dtype=np.complex128)
        pts = chart_points(d, 0, coords)
        weights = np.full(pts.shape[0], 1.0 / pts.shape[0])
        return QuadratureMeasure(normalize_points(pts), weights, kind, nr, na)

    nodes, w = _axis_rule(nr, na)
    coords = np.array(list(product(nodes, repeat=d)), dtype=np.complex128)
    area = np.prod(np.array(list(product(w, repeat=d))), axis=1)
    # Fubini–Study volume form normalized to total mass 1
    density = math.factorial(d) / np.pi**d * (1.0 + np.sum(np.abs(coords) ** 2, axis=1)) ** -(d + 1)
    blocks, weights = [], []
    for j in range(d + 1):
        blocks.append(chart_points(d, j, coords))
        weights.append(area * density)
    return QuadratureMeasure(
        points=normalize_points(np.vstack(blocks)),
        weights=np.concatenate(weights),
        kind=kind,
        radial=nr,
        angular=na,
    )
