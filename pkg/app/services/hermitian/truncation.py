from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import (
    HermitianPair,
    Polygon,
    polygon,
    relative_spectrum,
    simultaneous_basis,
)


@dataclass(frozen=True)
class TruncationResult:
    value: float
    surrogate: HermitianForm
    threshold: float


def truncated_degree(pair: HermitianPair, a: float) -> TruncationResult:
    """
    Σ_i max(μ_i, a) together with the Hermitian surrogate ψ′ of ψ∨φ(a):
    diagonal in the simultaneous basis with entries max(λ_i, e^{2a}), so that
    ‖·‖_{ψ∨φ(a)} ≤ ‖·‖_{ψ′} ≤ √2·‖·‖_{ψ∨φ(a)}, and deg(φ, ψ′) is the value.
    """
    slopes = relative_spectrum(pair).slopes
    value = float(np.sum(np.maximum(slopes, a)))

    basis = simultaneous_basis(pair)
    capped = np.maximum(basis.eigenvalues, np.exp(2.0 * a))
    # V⁻¹ = Vᴴφ since V is φ-orthonormal
    dual = pair.phi.gram @ basis.vectors
    gram = (dual * capped) @ dual.conj().T
    surrogate = HermitianForm.from_matrix(
        (gram + gram.conj().T) / 2, scalar_kind=pair.scalar_kind
    )
    return TruncationResult(value=value, surrogate=surrogate, threshold=a)


def truncated_norm(pair: HermitianPair, a: float, x: np.ndarray) -> np.ndarray | float:
    """Evaluate ‖x‖_{ψ∨φ(a)} = max(‖x‖_ψ, e^a‖x‖_φ)."""
    return np.maximum(pair.psi.norm(x), np.exp(a) * pair.phi.norm(x))


def legendre_value(poly: Polygon, a: float) -> float:
    """
    sup_t (P̃(t) − a·t) + a·r; equals Σ max(μ_i, a) for the polygon's slopes.
    """
    ranks = np.arange(poly.rank + 1, dtype=np.float64)
    return float(np.max(poly.breakpoints - a * ranks) + a * poly.rank)


def legendre_identity(pair: HermitianPair, a: float) -> float:
    return legendre_value(polygon(pair), a)
