from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.errors import InvalidInput, NumericalFailure, RankDeficient
from app.services.hermitian.forms import HermitianForm, ScalarKind, random_form

logger = logging.getLogger(__name__)

# Slope theory of a space with two inner products:
#   1) pencil diagonalization by Cholesky whitening
#   2) slopes, degree, polygon
#   3) Harder-Narasimhan flag from grouped eigenspaces
#   4) restriction / quotient pairs


@dataclass(frozen=True)
class HermitianPair:
    phi: HermitianForm
    psi: HermitianForm

    def __post_init__(self) -> None:
        if self.phi.dim != self.psi.dim:
            raise InvalidInput(
                "Forms of a pair must have the same dimension.",
                details={"phi": self.phi.dim, "psi": self.psi.dim},
            )
        if self.phi.scalar_kind != self.psi.scalar_kind:
            raise InvalidInput("Forms of a pair must have the same scalar kind.")

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def scalar_kind(self) -> ScalarKind:
        return self.phi.scalar_kind


@dataclass(frozen=True)
class SlopeProfile:
    slopes: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.slopes, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("SLOPES_MUST_BE_1D")
        if arr.size > 1 and np.any(np.diff(arr) > 1e-12 * max(1.0, float(np.abs(arr).max()))):
            raise ValueError("SLOPES_NOT_SORTED")
        object.__setattr__(self, "slopes", arr)

    @property
    def dim(self) -> int:
        return int(self.slopes.size)

    @property
    def mean(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.mean(self.slopes))


@dataclass(frozen=True)
class Polygon:
    """
    Concave piecewise-linear P̃ on [0, r], given by its values at integers.
    `normalized` holds P(i/r) = P̃(i)/r.
    """

    breakpoints: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.breakpoints, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("INVALID_POLYGON")
        if abs(arr[0]) > 1e-12:
            raise ValueError("POLYGON_MUST_START_AT_ZERO")
        object.__setattr__(self, "breakpoints", arr)

    @classmethod
    def from_slopes(cls, slopes: np.ndarray) -> Polygon:
        return cls(breakpoints=np.concatenate([[0.0], np.cumsum(slopes)]))

    @property
    def rank(self) -> int:
        return int(self.breakpoints.size - 1)

    @property
    def degree(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def normalized(self) -> np.ndarray:
        if self.rank == 0:
            return self.breakpoints.copy()
        return self.breakpoints / self.rank

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def value(self, t: float | np.ndarray) -> float | np.ndarray:
        """P̃ at real t in [0, r]."""
        grid = np.arange(self.rank + 1, dtype=np.float64)
        out = np.interp(t, grid, self.breakpoints)
        return float(out) if np.ndim(out) == 0 else out

    def normalized_value(self, t: float | np.ndarray) -> float | np.ndarray:
        """P at real t in [0, 1]."""
        grid = np.linspace(0.0, 1.0, self.rank + 1)
        out = np.interp(t, grid, self.normalized)
        return float(out) if np.ndim(out) == 0 else out

    def is_concave(self, tol: float = 1e-10) -> bool:
        if self.rank < 2:
            return True
        return bool(np.all(np.diff(self.breakpoints, 2) <= tol))


@dataclass(frozen=True)
class Flag:
    """
    0 = V_0 ⊂ V_1 ⊂ … ⊂ V_n = V; `subspaces[i]` is a basis matrix of V_{i+1}.
    """

    subspaces: tuple[np.ndarray, ...]
    step_slopes: tuple[float, ...]

    def __post_init__(self) -> None:
        dims = [int(w.shape[1]) for w in self.subspaces]
        if any(b <= a for a, b in zip(dims, dims[1:])):
            raise ValueError("FLAG_NOT_STRICT")
        if any(b >= a for a, b in zip(self.step_slopes, self.step_slopes[1:])):
            raise ValueError("FLAG_SLOPES_NOT_DECREASING")
        if len(self.step_slopes) not in (0, len(self.subspaces)):
            raise ValueError("FLAG_SLOPES_LENGTH")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(w.shape[1]) for w in self.subspaces)

    @property
    def length(self) -> int:
        return len(self.subspaces)


@dataclass(frozen=True)
class SimultaneousBasis:
    """
    Columns are φ-orthonormal and ψ-orthogonal; ψ(v_i, v_i) = eigenvalues[i],
    sorted descending.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SpectralMeasure:
    """
    Discrete law Σ mass·δ_value, atoms sorted by value.
    """

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        masses = np.asarray(self.masses, dtype=np.float64)
        if values.shape != masses.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("INVALID_MEASURE_SHAPE")
        if np.any(masses <= 0):
            raise ValueError("MASSES_MUST_BE_POSITIVE")
        if abs(float(masses.sum()) - 1.0) > 1e-12:
            raise ValueError("MASSES_MUST_SUM_TO_ONE")
        order = np.argsort(values, kind="stable")
        object.__setattr__(self, "values", values[order])
        object.__setattr__(self, "masses", masses[order])

    @classmethod
    def uniform(cls, values: np.ndarray | list[float]) -> SpectralMeasure:
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("EMPTY_MEASURE")
        return cls(values=arr, masses=np.full(arr.size, 1.0 / arr.size))

    @classmethod
    def dirac(cls, value: float) -> SpectralMeasure:
        return cls(values=np.array([value]), masses=np.array([1.0]))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(v), float(m)) for v, m in zip(self.values, self.masses)]

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.masses))

    def cdf(self, t: float | np.ndarray) -> float | np.ndarray:
        cum = np.cumsum(self.masses)
        idx = np.searchsorted(self.values, t, side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        out = np.minimum(out, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, factor: float) -> SpectralMeasure:
        return SpectralMeasure(values=self.values * factor, masses=self.masses)


def _pencil(pair: HermitianPair) -> SimultaneousBasis:
    r = pair.dim
    if r == 0:
        return SimultaneousBasis(vectors=np.zeros((0, 0)), eigenvalues=np.zeros(0))

    lower = pair.phi.cholesky
    try:
        left = scipy.linalg.solve_triangular(lower, pair.psi.gram, lower=True)
        whitened = scipy.linalg.solve_triangular(lower, left.conj().T, lower=True)
        whitened = (whitened + whitened.conj().T) / 2
        eigvals, eigvecs = scipy.linalg.eigh(whitened)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(
            "Eigen-solver failed on the pencil.", details={"dim": r}
        ) from exc

    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    if eigvals[-1] <= 0:
        raise NumericalFailure(
            "Pencil has a non-positive eigenvalue.",
            details={"min_eigenvalue": float(eigvals[-1])},
        )

    vectors = scipy.linalg.solve_triangular(lower.conj().T, eigvecs, lower=False)
    return SimultaneousBasis(vectors=vectors, eigenvalues=eigvals)


def simultaneous_basis(pair: HermitianPair) -> SimultaneousBasis:
    return _pencil(pair)


def relative_spectrum(pair: HermitianPair) -> SlopeProfile:
    """
    μ_i = ½ ln λ_i for the eigenvalues of the pencil (ψ, φ), descending.
    """
    basis = _pencil(pair)
    return SlopeProfile(slopes=0.5 * np.log(basis.eigenvalues))


def degree(pair: HermitianPair) -> float:
    """½ ln det(φ⁻¹ψ)."""
    return 0.5 * (pair.psi.log_det - pair.phi.log_det)


def polygon(pair: HermitianPair) -> Polygon:
    return Polygon.from_slopes(relative_spectrum(pair).slopes)


def spectral_measure(profile: SlopeProfile, *, scale: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure.uniform(profile.slopes * scale)


def _group_eigenvalues(eigenvalues: np.ndarray, gap_tol: float) -> list[tuple[int, int]]:
    groups: list[tuple[int, int]] = []
    start = 0
    for i in range(1, eigenvalues.size):
        prev = eigenvalues[i - 1]
        if (prev - eigenvalues[i]) / prev > gap_tol:
            groups.append((start, i))
            start = i
    groups.append((start, eigenvalues.size))
    return groups


def hn_filtration(pair: HermitianPair, *, gap_tol: float | None = None) -> Flag:
    """
    Steps span the eigenspaces of the top distinct eigenvalues; eigenvalues
    closer than the relative gap tolerance share a step.
    """
    tol = settings.HN_GAP_REL_TOL if gap_tol is None else gap_tol
    basis = _pencil(pair)
    if pair.dim == 0:
        return Flag(subspaces=(), step_slopes=())

    slopes = 0.5 * np.log(basis.eigenvalues)
    groups = _group_eigenvalues(basis.eigenvalues, tol)
    subspaces = tuple(basis.vectors[:, :stop] for _, stop in groups)
    step_slopes = tuple(float(np.mean(slopes[start:stop])) for start, stop in groups)

    logger.debug(
        "hn filtration computed",
        extra={"event": "hermitian.hn.computed", "dim": pair.dim, "rank": len(groups)},
    )
    return Flag(subspaces=subspaces, step_slopes=step_slopes)


def _check_full_rank(w: np.ndarray, r: int) -> np.ndarray:
    arr = np.asarray(w)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] != r:
        raise InvalidInput("Subspace basis has the wrong shape.", details={"shape": arr.shape})
    k = arr.shape[1]
    if k == 0 or np.linalg.matrix_rank(arr) < k:
        raise RankDeficient("Subspace basis is rank deficient.", details={"columns": k})
    return arr


def restrict_pair(pair: HermitianPair, w: np.ndarray) -> HermitianPair:
    basis = _check_full_rank(w, pair.dim)
    return HermitianPair(phi=pair.phi.congruence(basis), psi=pair.psi.congruence(basis))


def complement_basis(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the standard orthogonal complement of span(w)."""
    return scipy.linalg.null_space(np.asarray(w).conj().T)


def _quotient_form(form: HermitianForm, w: np.ndarray, c: np.ndarray) -> HermitianForm:
    # Schur complement of the W block, i.e. the inverse of the
    # complementary block of the inverse Gram in the basis [W C]
    h_ww = w.conj().T @ form.gram @ w
    h_wc = w.conj().T @ form.gram @ c
    h_cc = c.conj().T @ form.gram @ c
    schur = h_cc - h_wc.conj().T @ scipy.linalg.solve(h_ww, h_wc, assume_a="pos")
    kind: ScalarKind = "complex" if np.iscomplexobj(schur) else "real"
    if form.scalar_kind == "complex":
        kind = "complex"
    return HermitianForm.from_matrix((schur + schur.conj().T) / 2, scalar_kind=kind)


def quotient_pair(
    pair: HermitianPair, w: np.ndarray, *, complement: np.ndarray | None = None
) -> HermitianPair:
    """
    Quotient norms on V/W, in the basis given by the images of `complement`
    (default: orthogonal complement of W).
    """
    basis = _check_full_rank(w, pair.dim)
    c = complement_basis(basis) if complement is None else np.asarray(complement)
    if c.shape[1] == 0:
        empty = np.zeros((0, 0), dtype=pair.phi.gram.dtype)
        form = HermitianForm(gram=empty, scalar_kind=pair.scalar_kind)
        return HermitianPair(phi=form, psi=form)
    if np.linalg.matrix_rank(np.hstack([basis, c])) < pair.dim:
        raise RankDeficient("Complement does not span V together with W.")
    return HermitianPair(
        phi=_quotient_form(pair.phi, basis, c),
        psi=_quotient_form(pair.psi, basis, c),
    )


def subquotient_pairs(pair: HermitianPair, flag: Flag) -> list[HermitianPair]:
    """
    Pairs on V_i / V_{i-1}; the basis of each piece is the complement of
    V_{i-1} inside V_i.
    """
    pieces: list[HermitianPair] = []
    previous: np.ndarray | None = None
    for step in flag.subspaces:
        if previous is None:
            pieces.append(restrict_pair(pair, step))
        else:
            restricted = restrict_pair(pair, step)
            # coordinates of V_{i-1} inside the basis of V_i
            coords, *_ = np.linalg.lstsq(step, previous, rcond=None)
            pieces.append(quotient_pair(restricted, coords))
        previous = step
    return pieces


def random_pair(
    rng: np.random.Generator,
    dim: int,
    scalar_kind: ScalarKind = "real",
    *,
    spread: float = 1.0,
) -> HermitianPair:
    return HermitianPair(
        phi=random_form(rng, dim, scalar_kind, spread=spread),
        psi=random_form(rng, dim, scalar_kind, spread=spread),
    )
