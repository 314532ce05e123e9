from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import HermitianPair
from app.services.norms.oracles import FunctionalFamily

# Matrix JSON: {"rows": [[x, ...], ...]}; a complex entry is written [re, im].

Entry = float | tuple[float, float]


class MatrixModel(BaseModel):
    rows: list[list[Entry]] = Field(..., min_length=1)

    @field_validator("rows")
    @classmethod
    def validate_rectangular(cls, value: list[list[Entry]]) -> list[list[Entry]]:
        width = len(value[0])
        if width == 0 or any(len(row) != width for row in value):
            raise ValueError("matrix rows must be non-empty and of equal length")
        return value

    @property
    def is_complex(self) -> bool:
        return any(isinstance(x, tuple) for row in self.rows for x in row)

    def to_array(self) -> np.ndarray:
        if not self.is_complex:
            return np.array(self.rows, dtype=np.float64)
        return np.array(
            [
                [complex(*x) if isinstance(x, tuple) else complex(x) for x in row]
                for row in self.rows
            ],
            dtype=np.complex128,
        )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> MatrixModel:
        a = np.asarray(arr)
        if np.iscomplexobj(a):
            rows = [[(float(x.real), float(x.imag)) for x in row] for row in a]
        else:
            rows = [[float(x) for x in row] for row in a]
        return cls(rows=rows)


class GramPairModel(BaseModel):
    phi: MatrixModel
    psi: MatrixModel

    def to_pair(self) -> HermitianPair:
        kind = "complex" if self.phi.is_complex or self.psi.is_complex else "real"
        return HermitianPair(
            HermitianForm.from_matrix(self.phi.to_array(), scalar_kind=kind),
            HermitianForm.from_matrix(self.psi.to_array(), scalar_kind=kind),
        )


class FunctionalFamilyModel(BaseModel):
    functionals: MatrixModel

    def to_oracle(self) -> FunctionalFamily:
        return FunctionalFamily(self.functionals.to_array())


class NormPairModel(BaseModel):
    """Two functional families on the same space."""

    phi: FunctionalFamilyModel
    psi: FunctionalFamilyModel
