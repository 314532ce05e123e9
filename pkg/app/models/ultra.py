from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from app.services.ultrametric.expressions import norm_from_tree
from app.services.ultrametric.fields import ValuedField, field_from_dict
from app.services.ultrametric.slopes import UltraPair

# Rationals travel as [numerator, denominator] pairs or plain integers.
Rational = int | tuple[int, int]


class FieldModel(BaseModel):
    backend: Literal["padic", "tadic"] = "padic"
    p: int = Field(default=2, ge=2)

    def to_field(self) -> ValuedField:
        return field_from_dict(self.model_dump())


class UltraPairModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    field_spec: FieldModel = Field(default_factory=FieldModel, alias="field")
    phi: dict[str, Any]
    psi: dict[str, Any]
    truncations: list[Rational] = Field(default_factory=list)

    def to_pair(self) -> UltraPair:
        field = self.field_spec.to_field()
        return UltraPair(norm_from_tree(field, self.phi), norm_from_tree(field, self.psi))
