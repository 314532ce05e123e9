from __future__ import annotations

import logging
from pathlib import Path

import pytest

from app.core.errors import EXIT_NUMERICAL, GridTooCoarse, StageFailed
from app.core.hashing import hash_file
from app.models.experiment import BumpModel, ExperimentConfig, SubSeriesSpec, WeightSpec
from app.services import pipeline
from app.storage.bundles import read_csv, read_json

BUNDLE_FILES = ("spectra.csv", "polygons.csv", "cdf.csv", "report.json", "manifest.json")


def _config(out: Path, **fields) -> ExperimentConfig:
    return ExperimentConfig(n_schedule=[2, 4], out_dir=str(out), **fields)


def test_scaled_metric_gives_a_dirac_law(temp_output_dir: Path) -> None:
    c = 0.4
    result = pipeline.run(_config(temp_output_dir, psi=WeightSpec(scale=c)))
    sup = result.report["norms"]["sup"]
    for level in sup["levels"]:
        assert level["mean_slope"] == pytest.approx(c, abs=1e-9)
        assert level["method"] == "diagonal"
    assert sup["convergence"]["converged"]
    assert sup["convergence"]["energy_limit"] == pytest.approx(c, abs=1e-6)

    _, rows = read_csv(result.directory / "spectra.csv")
    for _, n, _, slope in rows:
        assert float(slope) == pytest.approx(int(n) * c, abs=1e-9)


def test_equal_weights_give_vanishing_slopes(temp_output_dir: Path) -> None:
    result = pipeline.run(_config(temp_output_dir, norm="both"))
    for kind in ("sup", "l2"):
        for level in result.report["norms"][kind]["levels"]:
            assert level["mean_slope"] == pytest.approx(0.0, abs=1e-9)
    assert "comparison" in result.report
    assert result.report["submultiplicativity"]["passed"]


def test_bundle_is_byte_stable(temp_output_dir: Path) -> None:
    config = _config(temp_output_dir / "first", psi=WeightSpec(kind="max-log"))
    first = pipeline.run(config)
    second = pipeline.run(config.with_overrides(out_dir=str(temp_output_dir / "second")))

    assert first.run_id == second.run_id
    for name in BUNDLE_FILES:
        a, b = first.directory / name, second.directory / name
        assert a.read_bytes() == b.read_bytes()
        assert hash_file(a) == hash_file(b)

    manifest = read_json(first.directory / "manifest.json")
    assert manifest["run_id"] == first.run_id
    assert "out_dir" not in manifest["config"]
    assert sorted(f["path"] for f in manifest["files"]) == sorted(BUNDLE_FILES[:-1])


def test_run_id_follows_the_config(temp_output_dir: Path) -> None:
    first = pipeline.run(_config(temp_output_dir))
    other = pipeline.run(_config(temp_output_dir, seed=7))
    assert first.run_id != other.run_id
    assert first.directory.parent == other.directory.parent == temp_output_dir


def test_failing_stage_is_named(
    temp_output_dir: Path, monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    def boom(*args, **kwargs):
        raise GridTooCoarse("sampling grid too coarse")

    monkeypatch.setattr(pipeline, "graded_norm_system", boom)
    caplog.set_level(logging.INFO, logger="app.services.pipeline")
    with pytest.raises(StageFailed) as excinfo:
        pipeline.run(_config(temp_output_dir))

    assert excinfo.value.stage == "norms"
    assert isinstance(excinfo.value.cause, GridTooCoarse)
    assert excinfo.value.exit_code == EXIT_NUMERICAL
    failed = [r for r in caplog.records if getattr(r, "event", None) == "pipeline.stage.failed"]
    assert len(failed) == 1
    assert failed[0].error_code == "grid_too_coarse"


def test_stages_log_in_order(temp_output_dir: Path, caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.INFO, logger="app.services.pipeline")
    pipeline.run(_config(temp_output_dir))
    finished = [
        r for r in caplog.records if getattr(r, "event", None) == "pipeline.stage.finished"
    ]
    assert len(finished) == 6
    events = [e for r in caplog.records if (e := getattr(r, "event", "")).startswith("pipeline.")]
    assert events[0] == "pipeline.run.started"
    assert events[-1] == "pipeline.run.finished"


def test_sub_series_is_summarized(temp_output_dir: Path) -> None:
    config = _config(
        temp_output_dir,
        norm="l2",
        sub_series=SubSeriesSpec(generators=[[0, 1]], p=1, levels=3),
    )
    summary = pipeline.run(config).report["sub_series"]
    assert summary["ranks"] == {"1": 2, "2": 3, "3": 4}
    assert summary["conditions"]["a"]["passed"]
    assert summary["conditions"]["closure"]["passed"]
    assert summary["body_volume"] > 0


@pytest.mark.slow
def test_bump_metric_laws_settle_along_the_schedule(temp_output_dir: Path) -> None:
    bump = BumpModel(center=[(0.5, 0.0)], height=0.1, radius=2.0)
    config = ExperimentConfig(
        psi=WeightSpec(bumps=[bump]),
        norm="both",
        n_schedule=[5, 10, 20, 40],
        out_dir=str(temp_output_dir),
    )
    report = pipeline.run(config).report

    sup = report["norms"]["sup"]["convergence"]
    assert sup["schedule"] == [5, 10, 20, 40]
    assert sup["kolmogorov"][-1] <= 0.1
    assert sup["polygon_decrements"][-1] <= 0.05

    comparison = report["comparison"]
    assert comparison["n"] == 40
    assert comparison["truncated_mean_gap"] <= comparison["truncated_mean_allowance"]
    assert comparison["limit_kolmogorov"] <= 0.1

    for kind in ("sup", "l2"):
        norm = report["norms"][kind]
        means = norm["convergence"]["mean_slopes"]
        assert abs(means[-1] - means[-2]) <= 5e-2
        assert abs(means[-2] - means[-3]) <= 5e-2
        assert norm["energy_gap"] <= 5e-2
