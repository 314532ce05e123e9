from __future__ import annotations

from fractions import Fraction
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.models.ultra import Rational
from app.services.linear_series.backends import VARIETY_DIMS
from app.services.linear_series.weights import Bump, MetricWeight, Weight
from app.services.ultrametric.fields import parse_rational


class BumpModel(BaseModel):
    # one [x, y] pair per affine coordinate of the chart X_0 = 1
    center: list[tuple[float, float]] = Field(..., min_length=1, max_length=2)
    height: float
    radius: float = Field(..., gt=0)

    @field_validator("center", mode="before")
    @classmethod
    def accept_flat_center(cls, value: object) -> object:
        # ℙ¹ configs may write the center as a single [x, y]
        if isinstance(value, list) and len(value) == 2 and all(
            isinstance(x, (int, float)) for x in value
        ):
            return [value]
        return value

    def to_bump(self) -> Bump:
        return Bump(
            center=tuple(complex(x, y) for x, y in self.center),
            height=self.height,
            radius=self.radius,
        )


class WeightSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["fubini-study", "max-log", "zero"] = "fubini-study"
    shift: float = 0.0
    scale: float = 0.0
    bumps: list[BumpModel] = Field(default_factory=list)
    # metric whose pointwise norm is the max of this one and `max_with`
    max_with: WeightSpec | None = None

    def to_weight(self) -> Weight:
        base = MetricWeight(
            kind=self.kind,
            shift=self.shift,
            scale=self.scale,
            bumps=tuple(b.to_bump() for b in self.bumps),
        )
        if self.max_with is None:
            return base
        return base.norm_max(self.max_with.to_weight())

    @property
    def on_polydisc(self) -> bool:
        return self.to_weight().support != "global"


class SubSeriesSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # coefficients of each generator against the grlex monomial basis of H⁰(O(p))
    generators: list[list[Rational]] = Field(..., min_length=1)
    p: int = Field(..., ge=0)
    levels: int = Field(default=4, ge=1, le=12)

    def fractions(self) -> list[list[Fraction]]:
        return [[parse_rational(q) for q in row] for row in self.generators]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variety: Literal["P1", "P2"] = "P1"
    phi: WeightSpec = Field(default_factory=WeightSpec)
    psi: WeightSpec = Field(default_factory=WeightSpec)
    norm: Literal["sup", "l2", "both"] = "sup"
    measure: Literal["fubini-study", "circle"] = "fubini-study"
    order: Literal["grlex", "grevlex", "lex"] = "grlex"
    n_schedule: list[int] = Field(default_factory=lambda: [5, 10, 20, 40], min_length=1)
    a_grid: list[float] | None = None
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    sub_series: SubSeriesSpec | None = None
    out_dir: str | None = None

    @field_validator("n_schedule")
    @classmethod
    def normalize_schedule(cls, value: list[int]) -> list[int]:
        if any(n < 1 for n in value):
            raise ValueError("n_schedule entries must be positive")
        return sorted(set(value))

    @field_validator("a_grid")
    @classmethod
    def validate_a_grid(cls, value: list[float] | None) -> list[float] | None:
        if value is None:
            return None
        if len(value) < 2 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("a_grid needs at least two increasing points")
        return value

    @model_validator(mode="after")
    def check_measure_support(self) -> ExperimentConfig:
        if self.norm in ("l2", "both") and self.measure != "circle":
            if self.phi.on_polydisc or self.psi.on_polydisc:
                raise ValueError("weights on the unit polydisc need the circle measure")
        for spec in (self.phi, self.psi):
            for bump in spec.bumps:
                if len(bump.center) != VARIETY_DIMS[self.variety]:
                    raise ValueError("bump center does not match the variety dimension")
        return self

    @property
    def d(self) -> int:
        return VARIETY_DIMS[self.variety]

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Apply CLI flags; None leaves a field untouched."""
        data = self.model_dump()
        n_max = overrides.pop("n_max", None)
        data.update({k: v for k, v in overrides.items() if v is not None})
        if n_max is not None:
            data["n_schedule"] = [n for n in data["n_schedule"] if n <= n_max] or [n_max]
        return ExperimentConfig.model_validate(data)

    def canonical(self) -> dict[str, Any]:
        """The fields that determine the bundle; the output location does not."""
        return self.model_dump(mode="json", exclude={"out_dir"})
