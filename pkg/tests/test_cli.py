import json

import pytest
from click.testing import CliRunner

from hyperlab.cli import main, run_experiment, validate_config


def small_config(**overrides):
    cfg = {
        "seed": 11,
        "dimension": 24,
        "operator": {"kind": "scaled_backward_shift", "weight": 2.0},
        "family": {"count": 96},
        "pipelines": {
            "khinchine": {"trials": 1500},
            "syndetic": {"eta": 0.5, "horizon": 2000},
            "ergodicity": {"N": 2000},
            "cantor": {"depth": 3, "seed_count": 128},
            "invariance": {"trials": 1500, "probes": 2, "terms": 8},
        },
    }
    cfg.update(overrides)
    return cfg


def test_validate_config_empty_and_malformed():
    cfg, errors = validate_config("")
    assert cfg is None and errors
    cfg, errors = validate_config("{not json")
    assert cfg is None and errors[0].startswith("invalid JSON")


def test_validate_config_field_errors():
    _, errors = validate_config(json.dumps({"pipelines": {"khinchine": {}}}))
    assert any("seed" in e for e in errors)
    _, errors = validate_config(
        json.dumps({"seed": 1, "dimension": 0, "pipelines": {"khinchine": {}}})
    )
    assert "dimension must be >= 1" in errors
    _, errors = validate_config(
        json.dumps(
            {"seed": 1, "operator": {"kind": "rotation"}, "pipelines": {"khinchine": {}}}
        )
    )
    assert any("operator kind" in e for e in errors)
    _, errors = validate_config(
        json.dumps({"seed": 1, "pipelines": {"mystery": {}}})
    )
    assert any("unknown pipeline" in e for e in errors)
    _, errors = validate_config(
        json.dumps({"seed": 1, "pipelines": {"syndetic": {"eta": -0.5}}})
    )
    assert any("eta must be positive" in e for e in errors)
    _, errors = validate_config(json.dumps({"seed": 1, "pipelines": {}}))
    assert "no pipelines requested" in errors


def test_validate_config_round_trips():
    raw = small_config()
    cfg, errors = validate_config(json.dumps(raw))
    assert not errors
    assert json.loads(json.dumps(cfg.to_dict())) == raw
    cfg2, errors2 = validate_config(json.dumps(cfg.to_dict()))
    assert not errors2 and cfg2.to_dict() == cfg.to_dict()


def test_cli_validate_command(tmp_path):
    runner = CliRunner()
    good = tmp_path / "good.json"
    good.write_text(json.dumps(small_config()))
    result = runner.invoke(main, ["validate", "--config", str(good)])
    assert result.exit_code == 0 and "config OK" in result.output
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"pipelines": {"khinchine": {}}}))
    result = runner.invoke(main, ["validate", "--config", str(bad)])
    assert result.exit_code == 1


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg, errors = validate_config(json.dumps(small_config()))
    assert not errors
    status = run_experiment(cfg, out)
    return out, status


def test_run_experiment_passes_and_writes_summary(run_dir):
    out, status = run_dir
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"]
    assert set(summary["results"]) == {
        "khinchine",
        "syndetic",
        "ergodicity",
        "cantor",
        "invariance",
    }
    for result in summary["results"].values():
        assert result["passed"]
    assert (out / "cantor_field.csv").exists()
    assert (out / "correlation.csv").exists()


def test_replay_is_byte_identical(run_dir, tmp_path):
    out, _ = run_dir
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "replay",
            "--summary",
            str(out / "summary.json"),
            "--out",
            str(tmp_path / "replay"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "replay identical" in result.output


def test_seed_override_changes_monte_carlo_results(run_dir, tmp_path):
    out, _ = run_dir
    cfg, _ = validate_config(json.dumps(small_config(seed=99)))
    other = tmp_path / "other"
    run_experiment(cfg, other)
    a = json.loads((out / "summary.json").read_text())
    b = json.loads((other / "summary.json").read_text())
    assert (
        a["results"]["khinchine"]["estimate"]
        != b["results"]["khinchine"]["estimate"]
    )


def test_construct_and_density_pipelines(tmp_path):
    cfg_raw = {
        "seed": 5,
        "dimension": 32,
        "operator": {"kind": "scaled_backward_shift", "weight": 2.0},
        "family": {"count": 256},
        "pipelines": {
            "construct": {
                "targets": [
                    {"coefficients": [[0.5, 0.0, 3]], "radius": 0.5, "reach_power": 1},
                    {"coefficients": [[0.4, 0.0, 11]], "radius": 0.5, "reach_power": 1},
                ],
                "trials": 1500,
                "cert_samples": 100,
            },
            "density": {"horizon": 3000, "use_construction": True},
        },
    }
    cfg, errors = validate_config(json.dumps(cfg_raw))
    assert not errors
    out = tmp_path / "out"
    status = run_experiment(cfg, out)
    summary = json.loads((out / "summary.json").read_text())
    assert status == 0 and summary["passed"]
    assert summary["results"]["construct"]["passed"]
    assert summary["results"]["density"]["construction_orbit"]["passed"]
    assert (out / "construction_state.json").exists()
    assert (out / "visit_times.csv").exists()


def test_run_command_rejects_invalid_config(tmp_path):
    runner = CliRunner()
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    result = runner.invoke(main, ["run", "--config", str(bad)])
    assert result.exit_code == 2


def test_perturbed_diagonal_config(tmp_path):
    cfg_raw = {
        "seed": 3,
        "dimension": 12,
        "operator": {"kind": "perturbed_diagonal", "eps": 0.2},
        "family": {"count": 12},
        "pipelines": {"khinchine": {"trials": 1500}},
    }
    cfg, errors = validate_config(json.dumps(cfg_raw))
    assert not errors
    assert run_experiment(cfg, tmp_path / "pd") == 0
