from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

import numpy as np

from app.core.config import settings
from app.core.errors import StageFailed
from app.core.identifiers import run_id_for_config
from app.core.run_context import set_run_id, stage_scope
from app.models.experiment import ExperimentConfig
from app.services.hermitian.forms import HermitianForm
from app.services.hermitian.pairs import HermitianPair, SpectralMeasure, relative_spectrum
from app.services.limit_laws.measures import kolmogorov, law_polygon
from app.services.limit_laws.report import ConvergenceReport, convergence_report, okounkov_energy
from app.services.linear_series.backends import VARIETY_DIMS
from app.services.linear_series.grids import quadrature
from app.services.linear_series.norm_systems import (
    GradedNormSystem,
    LevelNorms,
    SampledSupNorm,
    graded_norm_system,
    sub_series,
    submultiplicativity_audit,
    sup_surrogate,
)
from app.services.linear_series.values import (
    LevelValues,
    gr_quotient_values,
    schwarz_constant,
    value_table,
)
from app.services.linear_series.weights import Weight, distortion_bound
from app.services.okounkov.bodies import delta_body
from app.services.okounkov.limit import brunn_minkowski_audit, default_t_grid, filtered_cdf
from app.services.okounkov.orders import MonomialOrder
from app.services.okounkov.semigroup import (
    ValueTable,
    conditions_check,
    superadditivity_audit,
    theta_estimate,
)
from app.storage.bundles import bundle_dir, write_csv, write_json, write_manifest

logger = logging.getLogger(__name__)

SingleNorm = Literal["sup", "l2"]

# Experiment pipeline, one named stage per step:
#   norms     → sup / L² norms of both weights on every level
#   spectra   → relative slopes per level and norm kind
#   okounkov  → graded-quotient value tables and semigroup audits
#   converge  → Cauchy diagnostics and the extrapolated limit law
#   audits    → submultiplicativity and the optional sub-series
#   bundle    → CSV/JSON artifacts plus the manifest
# Levels below the schedule (n = 1) are added for the value tables only, so the
# observed semigroup generates its lattice.


@dataclass(frozen=True)
class LevelSpectrum:
    n: int
    slopes: np.ndarray
    # |μ_i − μ_i(exact norms)| ≤ budget
    budget: float
    method: str

    @property
    def law(self) -> SpectralMeasure:
        return SpectralMeasure.uniform(self.slopes / self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rank": int(self.slopes.size),
            "mean_slope": float(self.slopes.mean() / self.n),
            "budget": self.budget,
            "method": self.method,
        }


@dataclass(frozen=True)
class SupSurrogates:
    """Hermitian stand-ins for the two sup norms of one level."""

    phi: HermitianForm
    psi: HermitianForm
    phi_budget: float
    psi_budget: float
    method: str

    @property
    def budget(self) -> float:
        return self.phi_budget + self.psi_budget


@dataclass
class NormRun:
    kind: SingleNorm
    spectra: dict[int, LevelSpectrum] = field(default_factory=dict)
    surrogates: dict[int, SupSurrogates] = field(default_factory=dict)
    okounkov: dict[str, Any] = field(default_factory=dict)
    report: ConvergenceReport | None = None


@dataclass(frozen=True)
class RunResult:
    run_id: str
    directory: Path
    files: list[Path]
    report: dict[str, Any]


@contextmanager
def pipeline_stage(name: str) -> Iterator[None]:
    with stage_scope(name):
        logger.info("stage started", extra={"event": "pipeline.stage.started"})
        try:
            yield
        except StageFailed:
            raise
        except Exception as exc:
            code = getattr(exc, "error_code", type(exc).__name__)
            logger.warning(
                "stage failed", extra={"event": "pipeline.stage.failed", "error_code": code}
            )
            raise StageFailed(name, exc) from exc
        logger.info("stage finished", extra={"event": "pipeline.stage.finished"})


def _kinds(config: ExperimentConfig) -> list[SingleNorm]:
    return ["sup", "l2"] if config.norm == "both" else [config.norm]


def _diagonal_form(sup: SampledSupNorm) -> HermitianForm:
    return HermitianForm.from_matrix(
        np.diag(sup.section_norms**2).astype(np.complex128), scalar_kind="complex"
    )


def sup_surrogates(
    level: LevelNorms, phi: Weight, psi: Weight, rng: np.random.Generator
) -> SupSurrogates:
    """
    Torus-invariant weights: the diagonal form with entries ‖z^α‖_sup, within
    ½·ln r of the sup norm (the basis is orthogonal for it). Otherwise the
    centered design surrogate of the sampled functionals.
    """
    phi_sup, psi_sup = level.sup_pair()
    if phi.torus_invariant and psi.torus_invariant:
        half = 0.5 * float(np.log(level.backend.dim))
        return SupSurrogates(
            _diagonal_form(phi_sup), _diagonal_form(psi_sup), half, half, "diagonal"
        )
    phi_cert = sup_surrogate(phi_sup, rng=rng)
    psi_cert = sup_surrogate(psi_sup, rng=rng)
    return SupSurrogates(
        phi_cert.centered_form(),
        psi_cert.centered_form(),
        phi_cert.centered_distance,
        psi_cert.centered_distance,
        "design",
    )


def level_spectrum(
    n: int, kind: SingleNorm, level: LevelNorms, surrogates: SupSurrogates | None
) -> LevelSpectrum:
    if kind == "l2":
        return LevelSpectrum(n, relative_spectrum(level.l2_pair()).slopes, 0.0, "hermitian")
    if surrogates is None:
        raise ValueError("SUP_SPECTRUM_NEEDS_SURROGATES")
    pair = HermitianPair(surrogates.phi, surrogates.psi)
    return LevelSpectrum(
        n, relative_spectrum(pair).slopes, surrogates.budget, surrogates.method
    )


def level_values(
    kind: SingleNorm,
    which: Literal["phi", "psi"],
    level: LevelNorms,
    weight: Weight,
    order: MonomialOrder,
    surrogates: SupSurrogates | None,
) -> LevelValues:
    backend = level.backend
    if kind == "l2":
        form = level.phi_l2 if which == "phi" else level.psi_l2
        return gr_quotient_values(backend, form, order)
    sup = level.phi_sup if which == "phi" else level.psi_sup
    if weight.torus_invariant:
        return gr_quotient_values(backend, sup, order, exact_monomials=True)
    if surrogates is None:
        raise ValueError("SUP_VALUES_NEED_SURROGATES")
    form = surrogates.phi if which == "phi" else surrogates.psi
    budget = surrogates.phi_budget if which == "phi" else surrogates.psi_budget
    exact = gr_quotient_values(backend, form, order)
    return replace(exact, budget=budget, method="surrogate")


def okounkov_summary(phi_table: ValueTable, psi_table: ValueTable, d: int) -> dict[str, Any]:
    sample = phi_table.sample
    conditions = conditions_check(sample)
    body = delta_body(sample)
    law = filtered_cdf(phi_table, default_t_grid(phi_table))
    brunn = brunn_minkowski_audit(law, d, tol=2.0 / sample.n_max)
    audits = {
        name: superadditivity_audit(table)
        for name, table in (("phi", phi_table), ("psi", psi_table))
    }
    return {
        "conditions": conditions.to_dict(),
        "body_volume": float(body.body.volume),
        "body_counts": [[n, c] for n, c in body.counts],
        "theta_phi": theta_estimate(phi_table),
        "schwarz_constant_phi": schwarz_constant(phi_table),
        "brunn_minkowski": {"passed": brunn.passed, "worst_gap": brunn.worst_gap},
        "superadditivity": {
            name: {
                "passed": a.passed,
                "checked": a.checked,
                "worst_gap": a.worst_gap,
                "slack": table.slack,
            }
            for (name, a), table in zip(audits.items(), (phi_table, psi_table), strict=True)
        },
        "energy_estimate": okounkov_energy(phi_table, psi_table),
    }


def _law_bound(
    config: ExperimentConfig, system: GradedNormSystem, run: NormRun, schedule: list[int]
) -> float:
    """sup|u − v| on the points the norms see, plus the surrogate budgets."""
    top = system.level(schedule[-1])
    if run.kind == "sup":
        phi_sup, psi_sup = top.sup_pair()
        points = np.vstack([phi_sup.points, psi_sup.points])
        slack = settings.REFINE_REL_TOL
    else:
        points = quadrature(config.d, config.measure).points
        slack = 0.0
    reach = distortion_bound(system.phi, system.psi, 1, points)
    budget = max(run.spectra[n].budget / n for n in schedule)
    return reach + budget + slack + 1e-9


def _a_grid(config: ExperimentConfig, bounds: dict[SingleNorm, float]) -> np.ndarray:
    if config.a_grid is not None:
        return np.asarray(config.a_grid, dtype=np.float64)
    reach = max(bounds.values())
    return np.linspace(-(reach + 1.0), reach + 1.0, settings.A_GRID_POINTS)


def compare_norms(sup: NormRun, l2: NormRun, n: int) -> dict[str, Any]:
    """Sup against L² at the top level: truncated means and extrapolated CDFs."""
    if sup.report is None or l2.report is None:
        raise ValueError("COMPARISON_NEEDS_REPORTS")
    rank = int(sup.spectra[n].slopes.size)
    gap = float(np.max(np.abs(sup.report.truncated[-1] - l2.report.truncated[-1])))
    allowed = (0.5 * np.log(rank) + np.log(2.0)) / n
    return {
        "n": n,
        "truncated_mean_gap": gap,
        "truncated_mean_allowance": float(allowed),
        "within_allowance": bool(gap <= allowed),
        "limit_kolmogorov": kolmogorov(sup.report.limit, l2.report.limit),
    }


def sub_series_summary(
    config: ExperimentConfig,
    phi: Weight,
    psi: Weight,
    order: MonomialOrder,
    rng: np.random.Generator,
) -> dict[str, Any]:
    series_config = config.sub_series
    if series_config is None:
        raise ValueError("NO_SUB_SERIES")
    kind: SingleNorm = "l2" if config.norm == "l2" else "sup"
    system = sub_series(
        config.variety,
        series_config.fractions(),
        series_config.p,
        series_config.levels,
        phi,
        psi,
        kind,
        config.measure,
        order,
    )
    series = system.subspace
    if series is None:
        raise ValueError("NO_SUB_SERIES_BASIS")
    sample = series.sample()
    rows = []
    for n, level in sorted(system.levels.items()):
        sub = series.levels[n]
        if kind == "l2":
            norm: HermitianForm | SampledSupNorm = level.phi_l2
        else:
            norm = level.phi_sup
        rows.append(
            gr_quotient_values(
                sub.ambient,
                norm,
                order,
                sections=np.eye(level.dim, dtype=np.complex128),
                leading=sub.leading,
                level=n,
                rng=rng,
            )
        )
    table = value_table(rows, config.d)
    audit = superadditivity_audit(table)
    body = delta_body(sample)
    return {
        "p": series_config.p,
        "ranks": {str(n): lvl.rank for n, lvl in sorted(series.levels.items())},
        "conditions": conditions_check(sample).to_dict(),
        "body_volume": float(body.body.volume),
        "body_counts": [[n, c] for n, c in body.counts],
        "superadditivity": {
            "passed": audit.passed,
            "checked": audit.checked,
            "worst_gap": audit.worst_gap,
        },
        "theta_phi": theta_estimate(table),
    }


def _write_bundle(
    config: ExperimentConfig, run_id: str, runs: list[NormRun], report: dict[str, Any]
) -> tuple[Path, list[Path]]:
    directory = bundle_dir(run_id, config.out_dir)
    spectra_rows, polygon_rows, cdf_rows = [], [], []
    for norm_run in runs:
        kind = norm_run.kind
        for n, spectrum in sorted(norm_run.spectra.items()):
            spectra_rows.extend((kind, n, i, float(s)) for i, s in enumerate(spectrum.slopes))
            ts, ps = law_polygon(spectrum.law)
            polygon_rows.extend((kind, n, float(a), float(b)) for a, b in zip(ts, ps, strict=True))
        limit = norm_run.report.limit
        top = norm_run.spectra[max(norm_run.spectra)].law
        empirical = np.asarray(top.cdf(limit.t))
        cdf_rows.extend(
            (kind, float(t), float(v), float(e))
            for t, v, e in zip(limit.t, limit.values, empirical, strict=True)
        )
    files = [
        write_csv(directory / "spectra.csv", ("norm", "n", "index", "slope"), spectra_rows),
        write_csv(directory / "polygons.csv", ("norm", "n", "t", "value"), polygon_rows),
        write_csv(directory / "cdf.csv", ("norm", "t", "limit", "empirical"), cdf_rows),
        write_json(directory / "report.json", report),
    ]
    files.append(
        write_manifest(directory, run_id=run_id, config=config.canonical(), files=files)
    )
    return directory, files


def run(config: ExperimentConfig) -> RunResult:
    """
    Full experiment: norms → spectra → Okounkov tables → convergence → bundle.
    Every random step draws from one generator seeded by `config.seed`.
    """
    run_id = run_id_for_config(config.canonical())
    set_run_id(run_id)
    rng = np.random.default_rng(config.seed)
    phi, psi = config.phi.to_weight(), config.psi.to_weight()
    order = MonomialOrder(config.order, VARIETY_DIMS[config.variety])
    schedule = list(config.n_schedule)
    levels = sorted({1, *schedule})
    runs = [NormRun(kind) for kind in _kinds(config)]
    logger.info(
        "run started",
        extra={"event": "pipeline.run.started", "n": schedule[-1], "rows": len(levels)},
    )

    with pipeline_stage("norms"):
        system = graded_norm_system(
            config.variety, phi, psi, levels, config.norm, config.measure
        )

    with pipeline_stage("spectra"):
        for norm_run in runs:
            for n in levels:
                level = system.level(n)
                if norm_run.kind == "sup":
                    norm_run.surrogates[n] = sup_surrogates(level, phi, psi, rng)
                if n in schedule:
                    norm_run.spectra[n] = level_spectrum(
                        n, norm_run.kind, level, norm_run.surrogates.get(n)
                    )

    with pipeline_stage("okounkov"):
        for norm_run in runs:
            tables = {
                which: value_table(
                    [
                        level_values(
                            norm_run.kind,
                            which,
                            system.level(n),
                            weight,
                            order,
                            norm_run.surrogates.get(n),
                        )
                        for n in levels
                    ],
                    config.d,
                )
                for which, weight in (("phi", phi), ("psi", psi))
            }
            norm_run.okounkov = okounkov_summary(tables["phi"], tables["psi"], config.d)

    with pipeline_stage("converge"):
        bounds = {r.kind: _law_bound(config, system, r, schedule) for r in runs}
        grid = _a_grid(config, bounds)
        for norm_run in runs:
            ranks = (
                {n: int(norm_run.spectra[n].slopes.size) for n in schedule}
                if norm_run.kind == "sup"
                else None
            )
            norm_run.report = convergence_report(
                {n: norm_run.spectra[n].law for n in schedule},
                grid,
                bound=bounds[norm_run.kind],
                ranks=ranks,
                energy_estimate=norm_run.okounkov["energy_estimate"],
            )

    report: dict[str, Any] = {"run_id": run_id, "schedule": schedule, "norms": {}}
    for norm_run in runs:
        report["norms"][norm_run.kind] = {
            "levels": [norm_run.spectra[n].to_dict() for n in schedule],
            "convergence": norm_run.report.to_dict(),
            "energy_gap": abs(norm_run.report.energy_limit - norm_run.okounkov["energy_estimate"]),
            "okounkov": norm_run.okounkov,
        }
    if len(runs) == 2:
        report["comparison"] = compare_norms(runs[0], runs[1], schedule[-1])

    with pipeline_stage("audits"):
        if config.norm in ("sup", "both"):
            n0 = schedule[0]
            audit = submultiplicativity_audit(config.variety, phi, n0, n0, rng)
            report["submultiplicativity"] = {
                "n": n0,
                "m": n0,
                "passed": audit.passed,
                "checked": audit.checked,
                "worst_ratio": audit.worst_ratio,
            }
        if config.sub_series is not None:
            report["sub_series"] = sub_series_summary(config, phi, psi, order, rng)

    with pipeline_stage("bundle"):
        directory, files = _write_bundle(config, run_id, runs, report)

    logger.info(
        "run finished",
        extra={"event": "pipeline.run.finished", "path": str(directory), "rows": len(files)},
    )
    return RunResult(run_id=run_id, directory=directory, files=files, report=report)
