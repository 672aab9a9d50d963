"""End-to-end command-line round trips on a small generated corpus."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from streamtwin.cli import main
from streamtwin.events import parse_event_log
from streamtwin.learner.serialize import load_model
from streamtwin.pipeline.features import read_records_csv
from streamtwin.pipeline.selection import load_catalog, load_splits
from streamtwin.twins import load_sensitivities

SYNTH_CONFIG = {
    "n_users": 3,
    "sessions_per_user": 300,
    "seed": 13,
    "archetype_mix": {"stall_sensitive": 0.5, "bitrate_sensitive": 0.5},
    "n_videos": 14,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory) -> dict[str, Path]:
    """synth -> process -> train-twins, all through the command line."""
    root = tmp_path_factory.mktemp("cli")
    config_path = root / "synth.json"
    config_path.write_text(json.dumps(SYNTH_CONFIG))
    raw = root / "raw"
    assert main(["synth", "--config", str(config_path), "--out", str(raw)]) == 0

    processed = root / "processed"
    assert (
        main(
            [
                "process",
                "--sessions",
                str(raw / "events.csv"),
                "--seed",
                "3",
                "--threshold",
                "0.02",
                "--out",
                str(processed),
            ]
        )
        == 0
    )

    sensitivities = root / "sensitivities.csv"
    models = root / "models"
    assert (
        main(
            [
                "train-twins",
                "--records",
                str(processed / "records.csv"),
                "--splits",
                str(processed / "splits.json"),
                "--catalog",
                str(processed / "catalog.json"),
                "--seed",
                "3",
                "--out",
                str(sensitivities),
                "--models",
                str(models),
            ]
        )
        == 0
    )
    return {
        "root": root,
        "raw": raw,
        "processed": processed,
        "sensitivities": sensitivities,
        "models": models,
    }


def test_synth_writes_events_truth_and_users(workspace: dict[str, Path]) -> None:
    raw = workspace["raw"]
    events, report = parse_event_log(raw / "events.csv", "csv")
    assert report.parsed == report.rows
    assert len(events) > 3000
    truth_header = (raw / "ground_truth.csv").read_text().splitlines()[0]
    assert truth_header == "user_id,session_id,video_id,engagement,stall,bitrate,duration,popularity"
    users_lines = (raw / "users.csv").read_text().splitlines()
    assert users_lines[0].startswith("user_id,archetype,device_class")
    assert len(users_lines) == 1 + SYNTH_CONFIG["n_users"]


def test_ingest_normalizes_a_log(workspace: dict[str, Path], tmp_path, capsys) -> None:
    out = tmp_path / "normalized.csv"
    rc = main(
        ["ingest", "--input", str(workspace["raw"] / "events.csv"), "--out", str(out)]
    )
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["skipped"] == 0
    assert report["parsed"] == report["rows"] > 0
    events, _ = parse_event_log(out, "csv")
    assert len(events) == report["parsed"]


def test_process_writes_all_artifacts(workspace: dict[str, Path]) -> None:
    processed = workspace["processed"]
    records = read_records_csv(processed / "records.csv")
    splits = load_splits(processed / "splits.json")
    catalog = load_catalog(processed / "catalog.json")
    assert {r.user_id for r in records} == {s.user_id for s in splits}
    assert len(splits) == SYNTH_CONFIG["n_users"]
    assert catalog.selected_names  # something was selected at this threshold
    clean_report = json.loads((processed / "clean_report.json").read_text())
    # Balancing only ever discards sessions after cleaning.
    assert clean_report["sessions_out"] >= len(records)
    assert set(clean_report) == {
        "passes",
        "sessions_in",
        "sessions_out",
        "sessions_removed",
        "users_in",
        "users_out",
        "users_removed",
        "values_repaired",
    }


def test_train_twins_writes_sensitivities_and_models(workspace: dict[str, Path]) -> None:
    catalog = load_catalog(workspace["processed"] / "catalog.json")
    vectors, names = load_sensitivities(workspace["sensitivities"], catalog)
    assert names == catalog.selected_names
    assert [v.user_id for v in vectors] == ["u0000", "u0001", "u0002"]
    for vector in vectors:
        assert sum(vector.weights.values()) == pytest.approx(1.0)
    model_files = sorted(p.name for p in workspace["models"].glob("*.json"))
    assert model_files == ["u0000.json", "u0001.json", "u0002.json"]
    model = load_model(workspace["models"] / "u0000.json")
    assert model.feature_names == catalog.selected_names


def test_whatif_compares_scenarios_from_a_saved_model(
    workspace: dict[str, Path], tmp_path, capsys
) -> None:
    scenario_path = tmp_path / "scenarios.json"
    scenario_path.write_text(
        json.dumps(
            {
                "scenarios": [
                    {
                        "trace": "constant-16",
                        "cohort": ["u0000", "u0001"],
                        "n_sessions": 1,
                        "video_duration": 60.0,
                        "name": "smooth",
                    },
                    {
                        "trace": "lte-like",
                        "cohort": ["u0000", "u0001"],
                        "n_sessions": 1,
                        "video_duration": 60.0,
                        "name": "bumpy",
                    },
                ]
            }
        )
    )
    out = tmp_path / "result.json"
    rc = main(
        [
            "whatif",
            "--model",
            str(workspace["models"] / "u0000.json"),
            "--sensitivities",
            str(workspace["sensitivities"]),
            "--scenario",
            str(scenario_path),
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert "result" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["schema"] == "whatif-result/v1"
    assert [s["name"] for s in payload["scenarios"]] == ["smooth", "bumpy"]
    assert len(payload["deltas"]) == 2
    for scenario in payload["scenarios"]:
        assert scenario["cohort"] == ["u0000", "u0001"]
        assert len(scenario["predictions"]) == 2


def test_whatif_prints_to_stdout_without_out(workspace: dict[str, Path], tmp_path, capsys) -> None:
    scenario_path = tmp_path / "one.json"
    scenario_path.write_text(
        json.dumps(
            [
                {
                    "trace": "constant-16",
                    "cohort": ["u0000"],
                    "n_sessions": 1,
                    "video_duration": 60.0,
                }
            ]
        )
    )
    rc = main(
        [
            "whatif",
            "--model",
            str(workspace["models"] / "u0000.json"),
            "--sensitivities",
            str(workspace["sensitivities"]),
            "--scenario",
            str(scenario_path),
        ]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema"] == "whatif-result/v1"


def test_evaluate_full_horizon_report(workspace: dict[str, Path], tmp_path) -> None:
    report_path = tmp_path / "report.json"
    plot_dir = tmp_path / "plots"
    model_path = tmp_path / "unified.json"
    sens_path = tmp_path / "sens.csv"
    catalog_path = tmp_path / "catalog.json"
    rc = main(
        [
            "evaluate",
            "--sessions",
            str(workspace["raw"] / "events.csv"),
            "--horizons",
            "full",
            "--seed",
            "3",
            "--threshold",
            "0.02",
            "--report",
            str(report_path),
            "--plot-data",
            str(plot_dir),
            "--model",
            str(model_path),
            "--sensitivities",
            str(sens_path),
            "--catalog",
            str(catalog_path),
            "--no-timing",
        ]
    )
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert report["schema"] == "eval-report/v1"
    assert report["n_users"] == SYNTH_CONFIG["n_users"]
    assert [h["horizon"] for h in report["horizons"]] == ["full"]
    entry = report["horizons"][0]
    assert entry["horizon_s"] is None
    for variant in ("augmented", "benchmark"):
        scores = entry[variant]
        assert set(scores) >= {"mae", "rmse", "pearson", "spearman", "bin10_accuracy"}
        assert 0.0 <= scores["mae"] <= 1.0
    assert (plot_dir / "mae_vs_horizon.csv").exists()
    catalog = load_catalog(catalog_path)
    model = load_model(model_path)
    base = catalog.selected_names
    assert model.feature_names == [*base, *(f"sens_{n}" for n in base)]
    vectors, _ = load_sensitivities(sens_path, catalog)
    assert len(vectors) == SYNTH_CONFIG["n_users"]


def test_errors_exit_with_code_two(tmp_path, capsys) -> None:
    bad_config = tmp_path / "bad.json"
    bad_config.write_text(json.dumps({"n_users": 3, "sessions_per_user": 300, "seed": 1, "clock": 7}))
    rc = main(["synth", "--config", str(bad_config), "--out", str(tmp_path / "out")])
    assert rc == 2
    assert "error: unknown synth config key(s): ['clock']" in capsys.readouterr().err


def test_whatif_rejects_malformed_scenario_file(
    workspace: dict[str, Path], tmp_path, capsys
) -> None:
    scenario_path = tmp_path / "bad.json"
    scenario_path.write_text(json.dumps("everything"))
    rc = main(
        [
            "whatif",
            "--model",
            str(workspace["models"] / "u0000.json"),
            "--sensitivities",
            str(workspace["sensitivities"]),
            "--scenario",
            str(scenario_path),
        ]
    )
    assert rc == 2
    assert "scenario file" in capsys.readouterr().err


def test_unknown_command_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as info:
        main(["transmogrify"])
    assert info.value.code == 2
