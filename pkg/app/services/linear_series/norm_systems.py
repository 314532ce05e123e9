from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Literal

import numpy as np
import scipy.signal

from app.core.config import settings
from app.core.errors import (
    DegenerateNorm,
    GridTooCoarse,
    InvalidInput,
    NotPositiveDefinite,
    QuadratureResolutionError,
)
from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import HermitianPair
from app.services.linear_series.backends import (
    ProjectiveBackend,
    Variety,
    chart_points,
    normalize_points,
)
from app.services.linear_series.grids import (
    MeasureKind,
    PointGrid,
    QuadratureMeasure,
    quadrature,
    sup_grid,
)
from app.services.linear_series.weights import Weight
from app.services.norms.ellipsoids import SandwichCertificate, audit_ratios, design_form
from app.services.norms.oracles import FunctionalFamily
from app.services.okounkov.orders import Exponent, MonomialOrder
from app.services.okounkov.semigroup import SemigroupSample, pivot_basis

logger = logging.getLogger(__name__)

NormKind = Literal["sup", "l2", "both"]

# Norms of H⁰(ℙ^d, O(n)) induced by a weight u:
#   sup:  ‖s‖ = max_x |s(X)|·e^{−n·u(X)} over a grid plus one polished point per section
#   L²:   ‖s‖² = ∫ |s(X)|²·e^{−2n·u(X)} dμ by quadrature


def _section_log_values(
    backend: ProjectiveBackend, weight: Weight, points: np.ndarray
) -> np.ndarray:
    """(m, dim) ln|s_α(X)| − n·u(X); −inf off the weight's support."""
    u = weight(points)
    logs = backend.log_abs_monomials(points) - backend.n * u[:, None]
    logs[~np.isfinite(u)] = -np.inf
    return logs


def _section_log_sup(
    backend: ProjectiveBackend, weight: Weight, points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Chunked max over points of the section log values, with argmax rows."""
    best = np.full(backend.dim, -np.inf)
    where = np.zeros(backend.dim, dtype=np.int64)
    chunk = settings.GRAM_CHUNK
    for start in range(0, points.shape[0], chunk):
        logs = _section_log_values(backend, weight, points[start : start + chunk])
        k = np.argmax(logs, axis=0)
        vals = logs[k, np.arange(backend.dim)]
        better = vals > best
        best[better] = vals[better]
        where[better] = start + k[better]
    return best, where


def _offsets(d: int) -> np.ndarray:
    real = np.array(list(product((-1.0, 0.0, 1.0), repeat=2 * d)))
    return real[:, :d] + 1j * real[:, d:]


def _from_charts(d: int, charts: np.ndarray, coords: np.ndarray) -> np.ndarray:
    out = np.empty((coords.shape[0], d + 1), dtype=np.complex128)
    for j in np.unique(charts):
        mask = charts == j
        out[mask] = chart_points(d, int(j), coords[mask])
    return normalize_points(out)


def _polish(
    backend: ProjectiveBackend,
    weight: Weight,
    start: np.ndarray,
    start_values: np.ndarray,
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Pattern search around each section's best grid point, in the chart of
    its largest coordinate. Returns one point and log value per section.
    """
    d, dim = backend.d, backend.dim
    charts = np.argmax(np.abs(start), axis=1)
    coords = np.stack(
        [np.delete(p, c) / p[c] for p, c in zip(start, charts, strict=True)]
    ).astype(np.complex128)
    best = start_values.copy()
    points = start.copy()
    offsets = _offsets(d)
    k_count = offsets.shape[0]
    e = backend.homogeneous_exponents.astype(np.float64)
    rows = np.arange(dim)
    on_disc = weight.support != "global"
    for _ in range(settings.SUP_POLISH_STEPS):
        cand = coords[:, None, :] + step * offsets[None, :, :]
        if on_disc:
            cand = cand / np.maximum(1.0, np.abs(cand))
        flat = _from_charts(d, np.repeat(charts, k_count), cand.reshape(-1, d))
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(flat)).reshape(dim, k_count, d + 1)
        terms = np.where(e[:, None, :] == 0, 0.0, e[:, None, :] * logs)
        u = weight(flat).reshape(dim, k_count)
        vals = np.where(np.isfinite(u), terms.sum(axis=2) - backend.n * u, -np.inf)
        k = np.argmax(vals, axis=1)
        top = vals[rows, k]
        improve = top > best
        coords[improve] = cand[improve, k[improve]]
        points[improve] = flat.reshape(dim, k_count, d + 1)[improve, k[improve]]
        best[improve] = top[improve]
        step /= 4.0
    return points, best


def _functionals(backend: ProjectiveBackend, weight: Weight, points: np.ndarray) -> np.ndarray:
    u = weight(points)
    keep = np.isfinite(u)
    return backend.monomials(points[keep]) * np.exp(-backend.n * u[keep])[:, None]


@dataclass(frozen=True)
class SampledSupNorm:
    oracle: FunctionalFamily
    grid: PointGrid
    points: np.ndarray
    # ln ‖s_α‖ for the monomial basis
    log_section_norms: np.ndarray
    refinement_change: float

    @property
    def section_norms(self) -> np.ndarray:
        return np.exp(self.log_section_norms)


def sampled_sup_norm(
    backend: ProjectiveBackend,
    weight: Weight,
    grid: PointGrid | None = None,
    *,
    check_refinement: bool = True,
) -> SampledSupNorm:
    grid = grid or sup_grid(backend, weight)
    if weight.support == "global" and len(grid.charts) != backend.d + 1:
        raise InvalidInput("Sup grid must cover every chart.", details={"charts": grid.charts})
    base = grid.points
    log_sup, where = _section_log_sup(backend, weight, base)
    if not np.all(np.isfinite(log_sup)):
        raise GridTooCoarse("Grid misses the support of the weight.", details={"n": backend.n})
    spacing = max(grid.radius / max(grid.radial - 1, 1), 2.0 * np.pi * grid.radius / grid.angular)
    polished, log_sup = _polish(backend, weight, base[where], log_sup, 0.5 * spacing)
    points = np.vstack([base, polished])

    change = 0.0
    if check_refinement:
        fine, _ = _section_log_sup(backend, weight, grid.refined().points)
        fine = np.maximum(fine, log_sup)
        change = float(np.max(1.0 - np.exp(log_sup - fine)))
        if change >= settings.REFINE_REL_TOL:
            raise GridTooCoarse(
                "Sup norms moved under grid refinement; densify the grid.",
                details={
                    "n": backend.n,
                    "change": change,
                    "radial": grid.radial,
                    "angular": grid.angular,
                },
            )
    oracle = FunctionalFamily(_functionals(backend, weight, points), scalar_kind="complex")
    logger.debug(
        "sup norm sampled",
        extra={
            "event": "linear_series.sup.sampled",
            "n": backend.n,
            "dim": backend.dim,
            "rows": int(points.shape[0]),
            "width": change,
        },
    )
    return SampledSupNorm(
        oracle=oracle,
        grid=grid,
        points=points,
        log_section_norms=log_sup,
        refinement_change=change,
    )


def sup_norm_oracle(
    backend: ProjectiveBackend, weight: Weight, grid: PointGrid | None = None
) -> FunctionalFamily:
    """Point evaluations scaled by e^{−n·u}, after the refinement test."""
    return sampled_sup_norm(backend, weight, grid).oracle


def sup_surrogate(
    sup: SampledSupNorm, *, rng: np.random.Generator | None = None
) -> SandwichCertificate:
    """
    Design fit on a subsample of the functionals; the lower factor 1 holds for
    any subsample and the upper factor is exact for the whole family.
    """
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    rows = sup.oracle.functionals
    dim = sup.oracle.dim
    if rows.shape[0] > settings.DESIGN_POINTS + dim:
        # keep the polished rows, which sit at the end
        head = np.linspace(0, rows.shape[0] - dim - 1, settings.DESIGN_POINTS).astype(np.int64)
        picked = np.concatenate([np.unique(head), np.arange(rows.shape[0] - dim, rows.shape[0])])
        try:
            subset = FunctionalFamily(rows[picked], scalar_kind="complex")
        except DegenerateNorm:
            subset = sup.oracle
    else:
        subset = sup.oracle
    fit = design_form(subset, rng=rng)
    upper = sup.oracle.sup_ratio(fit.form)
    checked, lo, hi = audit_ratios(sup.oracle, fit.form, rng)
    return SandwichCertificate(
        form=fit.form,
        lower_factor=1.0,
        upper_factor=upper,
        checked_directions=checked,
        audit_min_ratio=lo,
        audit_max_ratio=hi,
        method="design_sampled",
    )


def _check_measure(weight: Weight, measure: QuadratureMeasure) -> None:
    if weight.support != "global" and measure.kind != "circle":
        raise InvalidInput(
            "A weight on the unit polydisc needs a measure inside it.",
            details={"measure": measure.kind, "support": weight.support},
        )


def _accumulate_gram(
    backend: ProjectiveBackend, weight: Weight, measure: QuadratureMeasure
) -> np.ndarray:
    gram = np.zeros((backend.dim, backend.dim), dtype=np.complex128)
    chunk = settings.GRAM_CHUNK
    for start in range(0, measure.points.shape[0], chunk):
        pts = measure.points[start : start + chunk]
        w = measure.weights[start : start + chunk]
        u = weight(pts)
        if not np.all(np.isfinite(u)):
            raise QuadratureResolutionError("Weight is not finite on the quadrature nodes.")
        a = backend.monomials(pts) * np.exp(-backend.n * u)[:, None]
        gram += (a.conj() * w[:, None]).T @ a
    return gram


def l2_gram(
    backend: ProjectiveBackend, weight: Weight, measure: QuadratureMeasure
) -> HermitianForm:
    """Gram of the monomial sections for ∫|s|²e^{−2nu} dμ."""
    _check_measure(weight, measure)
    gram = _accumulate_gram(backend, weight, measure)
    try:
        form = HermitianForm.from_matrix(gram, scalar_kind="complex")
    except NotPositiveDefinite as exc:
        raise QuadratureResolutionError(
            "Quadrature Gram is not positive definite; raise the resolution.",
            details={"n": backend.n, "radial": measure.radial, "angular": measure.angular},
        ) from exc
    logger.debug(
        "l2 gram built",
        extra={"event": "linear_series.l2.built", "n": backend.n, "dim": backend.dim},
    )
    return form


def l2_resolution_change(
    backend: ProjectiveBackend, weight: Weight, measure: QuadratureMeasure
) -> float:
    """Largest entry change under doubled resolution, relative to √(G_ii G_jj)."""
    coarse = _accumulate_gram(backend, weight, measure)
    fine = _accumulate_gram(backend, weight, measure.refined())
    diag = np.sqrt(np.abs(np.diag(fine)))
    scale = np.outer(diag, diag)
    return float(np.max(np.abs(fine - coarse) / scale))


def check_l2_resolution(
    backend: ProjectiveBackend, weight: Weight, measure: QuadratureMeasure
) -> float:
    change = l2_resolution_change(backend, weight, measure)
    if change >= settings.L2_RESOLUTION_TOL:
        raise QuadratureResolutionError(
            "Gram entries moved under quadrature refinement.",
            details={"n": backend.n, "change": change},
        )
    return change


def bergman_sup_factor(oracle: FunctionalFamily, gram: HermitianForm) -> float:
    """max_j √(ℓ_j G⁻¹ ℓ_jᴴ) = sup ‖s‖_sup / ‖s‖_L²."""
    return oracle.sup_ratio(gram)


def section_product(
    left: ProjectiveBackend,
    right: ProjectiveBackend,
    s: np.ndarray,
    t: np.ndarray,
) -> np.ndarray:
    """Coefficients of s·t in H⁰(O(n+m))."""
    if left.variety != right.variety:
        raise InvalidInput("Sections live on different varieties.")
    prod = scipy.signal.convolve(left.coefficient_array(s), right.coefficient_array(t))
    return left.at(left.n + right.n).from_coefficient_array(prod)


def _sup_on(
    backend: ProjectiveBackend, weight: Weight, coeffs: np.ndarray, points: np.ndarray
) -> np.ndarray:
    return np.abs(_functionals(backend, weight, points) @ coeffs.T).max(axis=0)


@dataclass(frozen=True)
class SubmultiplicativityAudit:
    passed: bool
    checked: int
    worst_ratio: float


def submultiplicativity_audit(
    variety: Variety,
    weight: Weight,
    n: int,
    m: int,
    rng: np.random.Generator,
    *,
    samples: int = 16,
    slack: float = 1e-8,
) -> SubmultiplicativityAudit:
    """
    ‖s·t‖ ≤ ‖s‖·‖t‖ for random s ∈ H⁰(O(n)), t ∈ H⁰(O(m)), every norm
    taken over the union of the three levels' sample points.
    """
    bn, bm = ProjectiveBackend(variety, n), ProjectiveBackend(variety, m)
    bnm = bn.at(n + m)
    points = np.vstack(
        [sampled_sup_norm(b, weight, check_refinement=False).points for b in (bn, bm, bnm)]
    )

    def draw(dim: int) -> np.ndarray:
        return rng.standard_normal((samples, dim)) + 1j * rng.standard_normal((samples, dim))

    s, t = draw(bn.dim), draw(bm.dim)
    st = np.stack([section_product(bn, bm, a, b) for a, b in zip(s, t, strict=True)])
    ratio = _sup_on(bnm, weight, st, points) / (
        _sup_on(bn, weight, s, points) * _sup_on(bm, weight, t, points)
    )
    worst = float(ratio.max())
    audit = SubmultiplicativityAudit(
        passed=worst <= 1.0 + slack, checked=samples, worst_ratio=worst
    )
    logger.debug(
        "submultiplicativity audited",
        extra={"event": "linear_series.submultiplicativity", "n": n + m, "upper": worst},
    )
    return audit


# ---------------------------------------------------------------------------
# graded systems


@dataclass(frozen=True)
class LevelNorms:
    backend: ProjectiveBackend
    phi_sup: SampledSupNorm | None = None
    psi_sup: SampledSupNorm | None = None
    phi_l2: HermitianForm | None = None
    psi_l2: HermitianForm | None = None
    # set when the norms live on a sub-series level, in the basis of its rows
    subspace: SubLevel | None = None

    def l2_pair(self) -> HermitianPair:
        if self.phi_l2 is None or self.psi_l2 is None:
            raise InvalidInput(
                "L² norms were not built for this level.", details={"n": self.backend.n}
            )
        return HermitianPair(self.phi_l2, self.psi_l2)

    def sup_pair(self) -> tuple[SampledSupNorm, SampledSupNorm]:
        if self.phi_sup is None or self.psi_sup is None:
            raise InvalidInput(
                "Sup norms were not built for this level.", details={"n": self.backend.n}
            )
        return self.phi_sup, self.psi_sup

    @property
    def dim(self) -> int:
        return self.backend.dim if self.subspace is None else self.subspace.rank


@dataclass(frozen=True)
class GradedNormSystem:
    variety: Variety
    phi: Weight
    psi: Weight
    norm_kind: NormKind
    measure: MeasureKind
    levels: dict[int, LevelNorms] = field(default_factory=dict)
    subspace: SubSeries | None = None

    @property
    def schedule(self) -> list[int]:
        return sorted(self.levels)

    def level(self, n: int) -> LevelNorms:
        if n not in self.levels:
            raise InvalidInput("Level was not built.", details={"n": n})
        return self.levels[n]


def _build_level(
    variety: Variety,
    phi: Weight,
    psi: Weight,
    n: int,
    norm_kind: NormKind,
    measure: QuadratureMeasure | None,
    check: bool,
) -> LevelNorms:
    backend = ProjectiveBackend(variety, n)
    sups: dict[str, SampledSupNorm] = {}
    forms: dict[str, HermitianForm] = {}
    for name, weight in (("phi", phi), ("psi", psi)):
        if norm_kind in ("sup", "both"):
            sups[name] = sampled_sup_norm(backend, weight, check_refinement=check)
        if norm_kind in ("l2", "both") and measure is not None:
            forms[name] = l2_gram(backend, weight, measure)
            if check and backend.d == 1:
                check_l2_resolution(backend, weight, measure)
    return LevelNorms(
        backend=backend,
        phi_sup=sups.get("phi"),
        psi_sup=sups.get("psi"),
        phi_l2=forms.get("phi"),
        psi_l2=forms.get("psi"),
    )


def graded_norm_system(
    variety: Variety,
    phi: Weight,
    psi: Weight,
    n_schedule: Iterable[int],
    norm_kind: NormKind = "sup",
    measure: MeasureKind = "fubini-study",
    *,
    check: bool = True,
) -> GradedNormSystem:
    """
    Norms of (V_n, φ_n) and (V_n, ψ_n) for each n of the schedule. Levels are
    independent and built on up to settings.THREADS workers. The L² resolution
    test runs on ℙ¹ only; on ℙ² the doubled rule is too large to build routinely.
    """
    schedule = sorted({int(n) for n in n_schedule})
    if not schedule or schedule[0] < 1:
        raise InvalidInput("Schedule needs positive levels.", details={"schedule": schedule})
    d = ProjectiveBackend(variety, 1).d
    rule = quadrature(d, measure) if norm_kind in ("l2", "both") else None

    def build(n: int) -> LevelNorms:
        return _build_level(variety, phi, psi, n, norm_kind, rule, check)

    if settings.THREADS > 1:
        with ThreadPoolExecutor(max_workers=settings.THREADS) as pool:
            built = list(pool.map(build, schedule))
    else:
        built = [build(n) for n in schedule]
    logger.info(
        "graded norm system built",
        extra={"event": "linear_series.system.built", "n": schedule[-1], "rows": len(schedule)},
    )
    return GradedNormSystem(
        variety=variety,
        phi=phi,
        psi=psi,
        norm_kind=norm_kind,
        measure=measure,
        levels=dict(zip(schedule, built, strict=True)),
    )


# ---------------------------------------------------------------------------
# sub-series


Polynomial = dict[Exponent, Fraction]


def _as_polynomial(backend: ProjectiveBackend, coefficients: Sequence) -> Polynomial:
    if len(coefficients) != backend.dim:
        raise InvalidInput(
            "Generator has the wrong number of coefficients.",
            details={"expected": backend.dim, "got": len(coefficients)},
        )
    poly = {
        alpha: Fraction(c)
        for alpha, c in zip(backend.exponents, coefficients, strict=True)
        if Fraction(c) != 0
    }
    if not poly:
        raise InvalidInput("Generator sections must be nonzero.")
    return poly


def _multiply(a: Polynomial, b: Polynomial) -> Polynomial:
    out: Polynomial = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb, strict=True))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def _dense(backend: ProjectiveBackend, poly: Polynomial) -> list[Fraction]:
    return [poly.get(alpha, Fraction(0)) for alpha in backend.exponents]


@dataclass(frozen=True)
class SubLevel:
    """V_n inside H⁰(O(n(p+1))): basis rows with distinct leading exponents."""

    ambient: ProjectiveBackend
    leading: list[Exponent]
    basis: list[list[Fraction]]

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array([[float(q) for q in row] for row in self.basis], dtype=np.complex128)

    @property
    def rank(self) -> int:
        return len(self.leading)


@dataclass(frozen=True)
class SubSeries:
    variety: Variety
    p: int
    order: MonomialOrder
    levels: dict[int, SubLevel]

    def sample(self) -> SemigroupSample:
        d = self.order.d
        return SemigroupSample.from_levels(
            d, {0: [(0,) * d], **{n: lvl.leading for n, lvl in self.levels.items()}}
        )


def sub_series_basis(
    variety: Variety,
    generators: Sequence[Sequence],
    p: int,
    n_max: int,
    order: MonomialOrder | None = None,
) -> SubSeries:
    """
    V_n = span{g_1⋯g_n · h : g_i generators in H⁰(O(p)), h ∈ H⁰(O(n))} ⊂ H⁰(O(n(p+1))),
    graded by n. A single generator s gives V_n = s^n·H⁰(O(n)).
    """
    if p < 0 or n_max < 1:
        raise InvalidInput("Need p ≥ 0 and n_max ≥ 1.", details={"p": p, "n_max": n_max})
    gen_backend = ProjectiveBackend(variety, p)
    gens = [_as_polynomial(gen_backend, g) for g in generators]
    if not gens:
        raise InvalidInput("At least one generator is required.")
    order = order or MonomialOrder("grlex", gen_backend.d)
    levels: dict[int, SubLevel] = {}
    products: list[Polynomial] = [{(0,) * gen_backend.d: Fraction(1)}]
    for n in range(1, n_max + 1):
        # reduce the n-fold generator products to a basis before multiplying on
        layer = ProjectiveBackend(variety, n * p)
        raw = [_multiply(a, g) for a in products for g in gens]
        _, reduced = pivot_basis([_dense(layer, q) for q in raw], layer.exponents, order)
        products = [
            {alpha: c for alpha, c in zip(layer.exponents, row, strict=True) if c != 0}
            for row in reduced
        ]
        ambient = ProjectiveBackend(variety, n * (p + 1))
        free = ProjectiveBackend(variety, n)
        spanning = [
            _dense(ambient, _multiply(q, {alpha: Fraction(1)}))
            for q, alpha in product(products, free.exponents)
        ]
        leading, basis = pivot_basis(spanning, ambient.exponents, order)
        levels[n] = SubLevel(ambient=ambient, leading=leading, basis=basis)
    logger.debug(
        "sub-series basis built",
        extra={
            "event": "linear_series.subseries.basis",
            "n": n_max,
            "rank": levels[n_max].rank,
        },
    )
    return SubSeries(variety=variety, p=p, order=order, levels=levels)


def restrict_sup(sup: SampledSupNorm, basis: np.ndarray) -> SampledSupNorm:
    """The sampled sup norm on the row span of `basis`, in the coordinates of its rows."""
    rows = sup.oracle.functionals @ np.asarray(basis).T
    log_norms = np.log(np.abs(rows).max(axis=0))
    return SampledSupNorm(
        oracle=FunctionalFamily(rows, scalar_kind="complex"),
        grid=sup.grid,
        points=sup.points,
        log_section_norms=log_norms,
        refinement_change=sup.refinement_change,
    )


def restrict_level(level: LevelNorms, sub: SubLevel) -> LevelNorms:
    """Every norm of an ambient level restricted to V_n, in the basis of `sub`."""
    if level.backend.n != sub.ambient.n:
        raise InvalidInput(
            "Level and subspace live in different degrees.",
            details={"n": level.backend.n, "expected": sub.ambient.n},
        )
    columns = sub.matrix.T
    return LevelNorms(
        backend=level.backend,
        phi_sup=None if level.phi_sup is None else restrict_sup(level.phi_sup, sub.matrix),
        psi_sup=None if level.psi_sup is None else restrict_sup(level.psi_sup, sub.matrix),
        phi_l2=None if level.phi_l2 is None else level.phi_l2.congruence(columns),
        psi_l2=None if level.psi_l2 is None else level.psi_l2.congruence(columns),
        subspace=sub,
    )


def sub_series(
    variety: Variety,
    generators: Sequence[Sequence],
    p: int,
    n_max: int,
    phi: Weight,
    psi: Weight,
    norm_kind: NormKind = "sup",
    measure: MeasureKind = "fubini-study",
    order: MonomialOrder | None = None,
    *,
    check: bool = True,
) -> GradedNormSystem:
    """
    The graded norm system of the sub-series V_n ⊂ H⁰(O(n(p+1))), n = 1..n_max:
    the ambient norms of degree n(p+1) restricted to V_n. Sup norms keep the
    sampled functionals composed with the basis, L² norms the congruent Gram.
    Levels are keyed by n.
    """
    series = sub_series_basis(variety, generators, p, n_max, order)
    d = ProjectiveBackend(variety, 1).d
    rule = quadrature(d, measure) if norm_kind in ("l2", "both") else None

    def build(n: int) -> LevelNorms:
        sub = series.levels[n]
        ambient = _build_level(variety, phi, psi, sub.ambient.n, norm_kind, rule, check)
        return restrict_level(ambient, sub)

    schedule = sorted(series.levels)
    if settings.THREADS > 1:
        with ThreadPoolExecutor(max_workers=settings.THREADS) as pool:
            built = list(pool.map(build, schedule))
    else:
        built = [build(n) for n in schedule]
    logger.info(
        "sub-series norm system built",
        extra={
            "event": "linear_series.subseries.built",
            "n": n_max,
            "rank": series.levels[n_max].rank,
        },
    )
    return GradedNormSystem(
        variety=variety,
        phi=phi,
        psi=psi,
        norm_kind=norm_kind,
        measure=measure,
        levels=dict(zip(schedule, built, strict=True)),
        subspace=series,
    )
