from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.errors import InvalidInput, NotHermitian, NotPositiveDefinite

ScalarKind = Literal["real", "complex"]


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """
    Positive definite Hermitian (or real symmetric) Gram matrix
    against a fixed ambient basis.

    Build it with `HermitianForm.from_matrix`, which validates
    symmetry and definiteness.
    """

    gram: np.ndarray
    scalar_kind: ScalarKind

    @classmethod
    def from_matrix(
        cls,
        matrix: np.ndarray | list,
        *,
        scalar_kind: ScalarKind | None = None,
        rel_tol: float | None = None,
    ) -> HermitianForm:
        gram = np.asarray(matrix)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise InvalidInput("Gram matrix must be square.", details={"shape": gram.shape})

        kind = scalar_kind or ("complex" if np.iscomplexobj(gram) else "real")
        if kind == "real":
            if np.iscomplexobj(gram):
                if np.abs(gram.imag).max(initial=0.0) > 0.0:
                    raise InvalidInput("Real form has complex entries.")
                gram = gram.real
            gram = gram.astype(np.float64)
        else:
            gram = gram.astype(np.complex128)

        if gram.shape[0] == 0:
            return cls(gram=gram, scalar_kind=kind)

        if not np.all(np.isfinite(gram)):
            raise InvalidInput("Gram matrix has non-finite entries.")

        tol = settings.HERMITIAN_REL_TOL if rel_tol is None else rel_tol
        scale = max(1.0, float(np.abs(gram).max()))
        asym = float(np.abs(gram - gram.conj().T).max())
        if asym > tol * scale:
            raise NotHermitian(
                "Gram matrix is not Hermitian.",
                details={"asymmetry": asym, "scale": scale},
            )

        sym = (gram + gram.conj().T) / 2
        try:
            scipy.linalg.cholesky(sym, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("Gram matrix is not positive definite.") from exc
        return cls(gram=sym, scalar_kind=kind)

    @classmethod
    def identity(cls, dim: int, scalar_kind: ScalarKind = "real") -> HermitianForm:
        dtype = np.float64 if scalar_kind == "real" else np.complex128
        return cls(gram=np.eye(dim, dtype=dtype), scalar_kind=scalar_kind)

    @property
    def dim(self) -> int:
        return int(self.gram.shape[0])

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower factor L with gram = L Lᴴ."""
        if self.dim == 0:
            return self.gram.copy()
        return scipy.linalg.cholesky(self.gram, lower=True)

    @cached_property
    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.abs(np.diag(self.cholesky)))))

    def norm(self, x: np.ndarray) -> np.ndarray | float:
        """
        ‖x‖ for a vector, or row-wise for a (k, r) batch.
        """
        arr = np.asarray(x)
        y = arr @ self.cholesky.conj()
        if arr.ndim == 1:
            return float(np.sqrt(np.sum(np.abs(y) ** 2)))
        return np.sqrt(np.sum(np.abs(y) ** 2, axis=1))

    def scaled(self, c: float) -> HermitianForm:
        """The form of the norm e^c·‖·‖."""
        return HermitianForm(gram=self.gram * np.exp(2.0 * c), scalar_kind=self.scalar_kind)

    def congruence(self, basis: np.ndarray) -> HermitianForm:
        """Gram of the same inner product in the columns of `basis`."""
        w = np.asarray(basis)
        kind: ScalarKind = (
            "complex" if self.scalar_kind == "complex" or np.iscomplexobj(w) else "real"
        )
        return HermitianForm.from_matrix(w.conj().T @ self.gram @ w, scalar_kind=kind)

    def realified(self) -> HermitianForm:
        """
        Real symmetric form on ℝ^{2r} for coordinates (Re x, Im x).
        """
        if self.scalar_kind == "real":
            return self
        p, q = self.gram.real, self.gram.imag
        block = np.block([[p, -q], [q, p]])
        return HermitianForm(gram=(block + block.T) / 2, scalar_kind="real")


def complexify(form: HermitianForm) -> HermitianForm:
    """
    Inverse of `HermitianForm.realified` for forms commuting with
    multiplication by i; other forms are first averaged with their
    rotated copy.
    """
    if form.dim % 2:
        raise ValueError("REALIFIED_DIM_MUST_BE_EVEN")
    r = form.dim // 2
    g = form.gram
    j = np.block([[np.zeros((r, r)), -np.eye(r)], [np.eye(r), np.zeros((r, r))]])
    avg = (g + j.T @ g @ j) / 2
    p = avg[:r, :r]
    q = avg[r:, :r]
    herm = p + 1j * q
    return HermitianForm.from_matrix((herm + herm.conj().T) / 2, scalar_kind="complex")


def realify_vectors(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x)
    return np.concatenate([arr.real, arr.imag], axis=-1)


def random_form(
    rng: np.random.Generator,
    dim: int,
    scalar_kind: ScalarKind = "real",
    *,
    spread: float = 1.0,
) -> HermitianForm:
    """
    Random positive definite form with log-eigenvalues spread over ±spread.
    """
    if scalar_kind == "real":
        a = rng.standard_normal((dim, dim))
    else:
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(a)
    eig = np.exp(rng.uniform(-spread, spread, size=dim))
    gram = (q * eig) @ q.conj().T
    return HermitianForm.from_matrix((gram + gram.conj().T) / 2, scalar_kind=scalar_kind)
