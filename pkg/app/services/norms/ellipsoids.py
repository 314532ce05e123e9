from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.errors import ConvergenceError, DegenerateNorm
from app.services.hermitian.forms import HermitianForm, complexify, realify_vectors
from app.services.norms.oracles import NormOracle

logger = logging.getLogger(__name__)

# Ellipsoid surrogates of general norms:
#   1) Khachiyan design on the polar generators (with away steps and
#      rank-one updates of the inverse)
#   2) John form, Löwner form, and the cheap design form
#   3) certificates: upper factor exact from the oracle tree, lower factor
#      from the design Gram of points inside the polar ball
#   4) a-posteriori audit on random directions

_REFRESH_EVERY = 200


@dataclass(frozen=True)
class DesignResult:
    """
    weights u on the points, shape X = Σ u_j p_jᴴp_j, and max_j p_j X⁻¹ p_jᴴ.
    {x : xᴴX x ≤ 1} ⊃ unit ball of max_j|p_j·x| ⊃ {x : xᴴX x ≤ 1/max_m}.
    """

    weights: np.ndarray
    shape: np.ndarray
    max_m: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SandwichCertificate:
    """
    lower·‖x‖_form ≤ ‖x‖ ≤ upper·‖x‖_form on the whole space.
    """

    form: HermitianForm
    lower_factor: float
    upper_factor: float
    checked_directions: int
    audit_min_ratio: float
    audit_max_ratio: float
    method: str

    @property
    def ratio(self) -> float:
        return self.upper_factor / self.lower_factor

    @property
    def distance(self) -> float:
        """d(norm, form) = sup |ln(‖x‖/‖x‖_form)|."""
        return max(abs(np.log(self.lower_factor)), abs(np.log(self.upper_factor)))

    @property
    def centered_distance(self) -> float:
        """d(norm, √(lower·upper)·form)."""
        return 0.5 * float(np.log(self.upper_factor / self.lower_factor))

    def centered_form(self) -> HermitianForm:
        return self.form.scaled(0.5 * float(np.log(self.lower_factor * self.upper_factor)))

    def passes_audit(self, rel_tol: float | None = None) -> bool:
        tol = settings.AUDIT_REL_TOL if rel_tol is None else rel_tol
        return (
            self.audit_min_ratio >= self.lower_factor * (1.0 - tol)
            and self.audit_max_ratio <= self.upper_factor * (1.0 + tol)
        )


def _design_shape(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    shape = (points.conj().T * weights) @ points
    return (shape + shape.conj().T) / 2


def _leverages(points: np.ndarray, inverse: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ij,jk,ik->i", points, inverse, points.conj()))


def khachiyan_design(
    points: np.ndarray,
    *,
    tol: float | None = None,
    max_iter: int | None = None,
    weights: np.ndarray | None = None,
    strict: bool = True,
) -> DesignResult:
    """
    Centered minimum-volume enclosing ellipsoid of ±points (complex points
    allowed, dimension counted over the scalar field).

    Stops once max_j M_j ≤ r(1 + tol).
    """
    tol = settings.MVEE_TOL if tol is None else tol
    max_iter = settings.MVEE_MAX_ITER if max_iter is None else max_iter

    pts = np.asarray(points)
    m, r = pts.shape
    if m < r or np.linalg.matrix_rank(pts) < r:
        raise DegenerateNorm("Polar points do not span the dual space.", details={"dim": r})

    u = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=np.float64).copy()
    u = np.clip(u, 0.0, None)
    u /= u.sum()

    shape = _design_shape(pts, u)
    try:
        inverse = np.linalg.inv(shape)
    except np.linalg.LinAlgError as exc:
        raise DegenerateNorm("Initial design is singular.") from exc
    lev = _leverages(pts, inverse)

    target = r * (1.0 + tol)
    iterations = 0
    converged = False
    for iterations in range(max_iter + 1):
        j_plus = int(np.argmax(lev))
        if lev[j_plus] <= target:
            converged = True
            break
        if iterations == max_iter:
            break

        support = np.flatnonzero(u > 0)
        j_minus = int(support[np.argmin(lev[support])])
        eps_plus = lev[j_plus] / r - 1.0
        eps_minus = 1.0 - lev[j_minus] / r

        if eps_plus >= eps_minus:
            j = j_plus
            step = (lev[j] - r) / (r * (lev[j] - 1.0))
        else:
            j = j_minus
            floor = -u[j] / (1.0 - u[j]) if u[j] < 1.0 else 0.0
            if lev[j] <= 1.0:
                step = floor
            else:
                step = max((lev[j] - r) / (r * (lev[j] - 1.0)), floor)

        denom = (1.0 - step) + step * lev[j]
        if denom <= 1e-14:
            break

        v = inverse @ pts[j].conj()
        cross = pts @ v
        inverse = (inverse - step * np.outer(v, v.conj()) / denom) / (1.0 - step)
        lev = (lev - step * np.abs(cross) ** 2 / denom) / (1.0 - step)
        u *= 1.0 - step
        u[j] += step
        u = np.clip(u, 0.0, None)

        if (iterations + 1) % _REFRESH_EVERY == 0:
            u /= u.sum()
            shape = _design_shape(pts, u)
            inverse = np.linalg.inv(shape)
            lev = _leverages(pts, inverse)

    u /= u.sum()
    shape = _design_shape(pts, u)
    inverse = np.linalg.inv(shape)
    lev = _leverages(pts, inverse)
    max_m = float(lev.max())
    converged = converged or max_m <= target
    result = DesignResult(
        weights=u,
        shape=shape,
        max_m=max_m,
        iterations=iterations,
        converged=converged,
    )

    logger.debug(
        "ellipsoid design finished",
        extra={
            "event": "ellipsoid.design.finished",
            "dim": r,
            "iterations": iterations,
            "max_m": max_m,
            "outcome": "converged" if converged else "capped",
        },
    )
    if not converged and strict:
        raise ConvergenceError(
            "Khachiyan iteration did not converge.",
            best=result,
            details={"iterations": iterations, "max_m": max_m, "target": target},
        )
    return result


def _dual_samples(norm: NormOracle) -> int:
    return max(32, settings.DUAL_SAMPLES_PER_DIM * norm.dim)


def _realified_points(points: np.ndarray, angles: int) -> np.ndarray:
    # rotations e^{iθ}p for θ in [0, π) turned into real covectors on (Re x, Im x)
    thetas = np.pi * np.arange(angles) / angles
    rotated = np.concatenate([np.exp(1j * t) * points for t in thetas], axis=0)
    return np.hstack([rotated.real, -rotated.imag])


def _form_from_real(gram: np.ndarray, scalar_kind: str) -> HermitianForm:
    real = HermitianForm.from_matrix((gram + gram.T) / 2, scalar_kind="real")
    if scalar_kind == "complex":
        return complexify(real)
    return real


@dataclass(frozen=True)
class _PolarFit:
    design: DesignResult
    lower_shape: HermitianForm  # ‖x‖_lower_shape ≤ ‖x‖ everywhere


def _polar_fit(norm: NormOracle, rng: np.random.Generator) -> _PolarFit:
    dual = norm.dual_points(rng, samples=_dual_samples(norm))
    points = dual.points
    if norm.scalar_kind == "complex":
        points = _realified_points(points, settings.COMPLEX_ANGLES)
    design = khachiyan_design(points)
    return _PolarFit(design=design, lower_shape=_form_from_real(design.shape, norm.scalar_kind))


def _lower_bound(lower_shape: HermitianForm, form: HermitianForm) -> float:
    """√λ_min(form⁻¹·lower_shape); then ‖x‖ ≥ that·‖x‖_form."""
    low = scipy.linalg.eigh(lower_shape.gram, form.gram, eigvals_only=True)[0]
    return float(np.sqrt(max(low, 0.0)))


def _audit_directions(norm: NormOracle, rng: np.random.Generator, count: int) -> np.ndarray:
    r = norm.dim
    if norm.scalar_kind == "real":
        xs = rng.standard_normal((count, r))
    else:
        xs = rng.standard_normal((count, r)) + 1j * rng.standard_normal((count, r))
    return np.vstack([np.eye(r, dtype=xs.dtype), xs])


def audit_ratios(
    norm: NormOracle, form: HermitianForm, rng: np.random.Generator, count: int | None = None
) -> tuple[int, float, float]:
    xs = _audit_directions(norm, rng, settings.AUDIT_DIRECTIONS if count is None else count)
    ratios = np.asarray(norm.evaluate(xs)) / np.asarray(form.norm(xs))
    return int(xs.shape[0]), float(ratios.min()), float(ratios.max())


def _certify(
    norm: NormOracle,
    form: HermitianForm,
    lower: float,
    upper: float,
    method: str,
    rng: np.random.Generator,
) -> SandwichCertificate:
    checked, lo, hi = audit_ratios(norm, form, rng)
    cert = SandwichCertificate(
        form=form,
        lower_factor=lower,
        upper_factor=upper,
        checked_directions=checked,
        audit_min_ratio=lo,
        audit_max_ratio=hi,
        method=method,
    )
    logger.debug(
        "sandwich certificate built",
        extra={
            "event": "ellipsoid.certificate.built",
            "dim": norm.dim,
            "lower": lower,
            "upper": upper,
            "outcome": method,
        },
    )
    return cert


def _hermitian_certificate(
    norm: NormOracle, form: HermitianForm, rng: np.random.Generator
) -> SandwichCertificate:
    return _certify(norm, form, 1.0, 1.0, "hermitian", rng)


def john_form(norm: NormOracle, *, rng: np.random.Generator | None = None) -> SandwichCertificate:
    """
    φ_J with (1/√r)‖·‖_{φ_J} ≤ ‖·‖ ≤ ‖·‖_{φ_J}, fitted as the polar of the
    minimum-volume ellipsoid around the polar generators.
    """
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    own = norm.as_hermitian()
    if own is not None:
        return _hermitian_certificate(norm, own, rng)

    fit = _polar_fit(norm, rng)
    candidate = _form_from_real(fit.design.max_m * fit.design.shape, norm.scalar_kind)
    upper = norm.sup_ratio(candidate)
    lower = _lower_bound(fit.lower_shape, candidate)
    # normalize so that the upper factor is 1
    form = candidate.scaled(float(np.log(upper)))
    return _certify(norm, form, lower / upper, 1.0, "john", rng)


def _boundary_points(norm: NormOracle, rng: np.random.Generator) -> np.ndarray:
    r = norm.dim
    eye = np.eye(r)
    combos = [eye]
    for i in range(r):
        for j in range(i + 1, r):
            combos.append((eye[i] + eye[j]).reshape(1, -1))
            combos.append((eye[i] - eye[j]).reshape(1, -1))
    count = settings.AUDIT_DIRECTIONS
    if norm.scalar_kind == "real":
        sampled = rng.standard_normal((count, r))
    else:
        sampled = rng.standard_normal((count, r)) + 1j * rng.standard_normal((count, r))
    xs = np.vstack([np.vstack(combos).astype(sampled.dtype), sampled])
    values = np.asarray(norm.evaluate(xs))
    return xs / values[:, None]


def lowner_form(norm: NormOracle, *, rng: np.random.Generator | None = None) -> SandwichCertificate:
    """
    φ_L with ‖·‖_{φ_L} ≤ ‖·‖ ≤ √r‖·‖_{φ_L}.

    Candidate 1 is the minimum-volume ellipsoid enclosing sampled boundary
    points of the unit ball; candidate 2 is the polar design shape. Both are
    certified (exact upper factor, design lower factor, normalized to lower 1)
    and the tighter one is returned.
    """
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    own = norm.as_hermitian()
    if own is not None:
        return _hermitian_certificate(norm, own, rng)

    fit = _polar_fit(norm, rng)
    polar = fit.lower_shape
    polar_upper = norm.sup_ratio(polar)

    boundary = _boundary_points(norm, rng)
    if norm.scalar_kind == "complex":
        boundary = realify_vectors(boundary)
    enclosing = khachiyan_design(boundary, strict=False)
    gram = np.linalg.inv(enclosing.shape) / enclosing.max_m
    candidate = _form_from_real(gram, norm.scalar_kind)
    lower = _lower_bound(polar, candidate)
    candidate = candidate.scaled(float(np.log(lower)))
    candidate_upper = norm.sup_ratio(candidate)

    if candidate_upper <= polar_upper:
        return _certify(norm, candidate, 1.0, candidate_upper, "lowner", rng)
    return _certify(norm, polar, 1.0, polar_upper, "lowner_polar", rng)


def design_form(
    norm: NormOracle,
    *,
    weights: np.ndarray | None = None,
    tol: float | None = None,
    max_iter: int | None = None,
    rng: np.random.Generator | None = None,
) -> SandwichCertificate:
    """
    Native (non-realified) design fit, started from `weights`, never raising
    on the iteration cap: ‖x‖_X ≤ ‖x‖ ≤ √max_m·‖x‖_X for any weights.
    Suited to large sampled sup-norm families.
    """
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    own = norm.as_hermitian()
    if own is not None:
        return _hermitian_certificate(norm, own, rng)

    dual = norm.dual_points(rng, samples=_dual_samples(norm))
    design = khachiyan_design(
        dual.points,
        tol=tol if tol is not None else settings.DESIGN_TOL,
        max_iter=max_iter if max_iter is not None else settings.DESIGN_MAX_ITER,
        weights=weights,
        strict=False,
    )
    form = HermitianForm.from_matrix(design.shape, scalar_kind=norm.scalar_kind)
    upper = norm.sup_ratio(form)
    return _certify(norm, form, 1.0, upper, "design", rng)
