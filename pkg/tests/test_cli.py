from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from app.core.errors import EXIT_CONFIG, EXIT_NUMERICAL
from app.main import main
from app.storage.bundles import read_csv, read_json, write_csv

QUIET = ["--log-level", "ERROR"]


def _write(path: Path, payload: object) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _summary(capsys: pytest.CaptureFixture[str]) -> dict:
    lines = [line for line in capsys.readouterr().out.splitlines() if line.strip()]
    return json.loads(lines[-1])


def _error(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_spectrum_of_a_gram_pair(tmp_path: Path, capsys) -> None:
    src = _write(
        tmp_path / "pair.json",
        {"phi": {"rows": [[1, 0], [0, 1]]}, "psi": {"rows": [[math.e**2, 0], [0, 1]]}},
    )
    code = main([*QUIET, "--out", str(tmp_path), "spectrum", str(src)])
    assert code == 0

    summary = _summary(capsys)
    assert summary["rank"] == 2
    assert summary["degree"] == pytest.approx(1.0)
    header, rows = read_csv(Path(summary["path"]))
    assert header == ["index", "slope"]
    assert [float(r[1]) for r in rows] == pytest.approx([1.0, 0.0])


def test_polygon_band_for_functional_families(tmp_path: Path, capsys) -> None:
    src = _write(
        tmp_path / "families.json",
        {
            "phi": {"functionals": {"rows": [[1, 0], [0, 1], [1, 1]]}},
            "psi": {"functionals": {"rows": [[2, 0], [0, 1], [1, -1]]}},
        },
    )
    assert main([*QUIET, "--out", str(tmp_path), "polygon", str(src)]) == 0
    summary = _summary(capsys)
    header, rows = read_csv(Path(summary["path"]))
    assert header == ["t", "value", "lower", "upper"]
    for _, value, lower, upper in rows:
        assert float(lower) <= float(value) <= float(upper)


def test_ultra_reports_exact_rationals(tmp_path: Path, capsys) -> None:
    src = _write(
        tmp_path / "ultra.json",
        {
            "field": {"backend": "padic", "p": 3},
            "phi": {"kind": "diagonal", "exponents": [0, 0]},
            "psi": {"kind": "diagonal", "exponents": [2, [1, 2]]},
            "truncations": [0, [1, 2]],
        },
    )
    assert main([*QUIET, "--out", str(tmp_path), "ultra", str(src)]) == 0
    summary = _summary(capsys)
    assert summary["degree"] == [5, 2]
    assert summary["truncations_exact"] is True
    report = read_json(Path(summary["path"]))
    assert report["slopes"] == [[2, 1], [1, 2]]


def test_okounkov_on_a_linear_table(tmp_path: Path, capsys) -> None:
    rows = [(n, a, float(a)) for n in range(1, 11) for a in range(n + 1)]
    table = write_csv(tmp_path / "table.csv", ("n", "a1", "value"), rows)
    assert main([*QUIET, "--out", str(tmp_path), "okounkov", str(table)]) == 0
    summary = _summary(capsys)
    assert summary["conditions_passed"] is True
    assert summary["superadditive"] is True
    report = read_json(tmp_path / "okounkov.json")
    assert report["theta"] == pytest.approx(1.0)
    assert report["monotone"] is True


def test_converge_on_saved_spectra(tmp_path: Path, capsys) -> None:
    rows = [(n, i, i + 0.5) for n in (10, 20, 40, 80) for i in range(n)]
    spectra = write_csv(tmp_path / "spectra.csv", ("n", "index", "slope"), rows)
    assert main([*QUIET, "--out", str(tmp_path), "converge", str(spectra)]) == 0
    summary = _summary(capsys)
    assert summary["converged"] is True
    assert summary["energy_limit"] == pytest.approx(0.5)


def test_converge_n_max_keeps_the_lower_levels(tmp_path: Path, capsys) -> None:
    rows = [(n, i, i + 0.5) for n in (10, 20, 40, 80) for i in range(n)]
    spectra = write_csv(tmp_path / "spectra.csv", ("n", "index", "slope"), rows)
    code = main([*QUIET, "--out", str(tmp_path), "--n-max", "40", "converge", str(spectra)])
    assert code == 0
    assert _summary(capsys)["energy_limit"] == pytest.approx(0.5)


def test_converge_n_max_below_every_level_is_a_config_error(tmp_path: Path, capsys) -> None:
    rows = [(n, i, i + 0.5) for n in (10, 20) for i in range(n)]
    spectra = write_csv(tmp_path / "spectra.csv", ("n", "index", "slope"), rows)
    code = main([*QUIET, "--out", str(tmp_path), "--n-max", "5", "converge", str(spectra)])
    assert code == EXIT_CONFIG
    err = _error(capsys)
    assert err["error_code"] == "config_error"
    assert err["details"]["levels"] == [10, 20]


def test_run_writes_a_bundle(tmp_path: Path, capsys) -> None:
    config = _write(tmp_path / "config.json", {"n_schedule": [2, 3]})
    out = tmp_path / "runs"
    code = main([*QUIET, "--config", str(config), "--out", str(out), "run"])
    assert code == 0
    summary = _summary(capsys)
    assert Path(summary["directory"]).parent == out
    assert "manifest.json" in summary["files"]


def test_invalid_config_exits_with_config_code(tmp_path: Path, capsys) -> None:
    config = _write(tmp_path / "config.json", {"norm": "operator"})
    code = main([*QUIET, "--config", str(config), "run"])
    assert code == EXIT_CONFIG
    err = _error(capsys)
    assert err["error_code"] == "config_error"
    assert err["exit_code"] == EXIT_CONFIG
    assert "details" in err


def test_missing_input_is_invalid(tmp_path: Path, capsys) -> None:
    code = main([*QUIET, "--out", str(tmp_path), "spectrum", str(tmp_path / "nope.json")])
    assert code == EXIT_CONFIG
    assert _error(capsys)["error_code"] == "invalid_input"


def test_indefinite_gram_matrix_is_a_numerical_failure(tmp_path: Path, capsys) -> None:
    src = _write(
        tmp_path / "pair.json",
        {"phi": {"rows": [[1, 0], [0, 1]]}, "psi": {"rows": [[1, 2], [2, 1]]}},
    )
    code = main([*QUIET, "--out", str(tmp_path), "spectrum", str(src)])
    assert code == EXIT_NUMERICAL
    assert _error(capsys)["error_code"] == "not_positive_definite"


def test_bad_spectra_header_is_reported(tmp_path: Path, capsys) -> None:
    bad = write_csv(tmp_path / "bad.csv", ("level", "slope"), [(1, 0.0)])
    code = main([*QUIET, "--out", str(tmp_path), "converge", str(bad)])
    assert code == EXIT_CONFIG
    err = _error(capsys)
    assert err["details"]["code"] == "SPECTRA_HEADER"


def test_missing_command_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
