from __future__ import annotations

import json

import pytest

from ustloop import cli, harness
from ustloop.config import ExperimentConfig, load_config, parse_config
from ustloop.errors import ConfigInvalid, SingularSystem
from ustloop.experiments import ExperimentResult
from ustloop.stats import StatReport

LOOP_LAW = {"experiment": "loop-law", "geometry": {"kind": "square-annulus", "size": 5, "hole": 1},
            "replicates": 500, "master_seed": 3}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


@pytest.mark.parametrize("patch", [
    {"replicates": 0},
    {"master_seed": -1},
    {"master_seed": 2**64},
    {"mesh_list": [1 / 32, 1 / 16]},
    {"tolerances": {"bogus": 1.0}},
    {"workers": 0},
    {"unknown_field": 1},
    {"geometry": {"kind": "annulus", "inner_radius": 3, "outer_radius": 2}},
])
def test_invalid_configs(patch):
    with pytest.raises(ConfigInvalid):
        parse_config({**LOOP_LAW, **patch})


def test_ks_experiments_need_samples():
    with pytest.raises(ConfigInvalid):
        parse_config({"experiment": "inversion-symmetry", "replicates": 999})
    assert parse_config({"experiment": "inversion-symmetry", "replicates": 1000}).replicates == 1000


def test_tolerance_defaults_and_overrides(tmp_path):
    cfg = load_config(write(tmp_path, {**LOOP_LAW, "tolerances": {"p_value": 0.05}}), master_seed=9)
    assert cfg.tolerance("p_value") == 0.05
    assert cfg.tolerance("loop_sum") == 1e-10
    assert cfg.master_seed == 9


def test_canonical_json_stable():
    a = parse_config(LOOP_LAW)
    b = parse_config(dict(reversed(list(LOOP_LAW.items()))))
    assert a.canonical_json() == b.canonical_json()


def test_git_blob_hash_matches_git():
    # `printf 'hello\n' | git hash-object --stdin`
    assert harness.git_blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_cli_validate_config(tmp_path, capsys):
    assert cli.main(["validate-config", str(write(tmp_path, LOOP_LAW))]) == 0
    assert cli.main(["validate-config", str(write(tmp_path, {**LOOP_LAW, "replicates": 0}, "bad.json"))]) == 2
    assert cli.main(["validate-config", str(tmp_path / "missing.json")]) == 2


def test_cli_run_and_determinism(tmp_path):
    cfg = write(tmp_path, LOOP_LAW)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert cli.main(["loop-law", "--config", str(cfg), "--out", str(out), "-q"]) == 0
    for name in ("results.jsonl", "report.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    manifest, other = (json.loads((out / "manifest.json").read_text()) for out in outs)
    assert manifest["config_sha256"] == other["config_sha256"]
    assert manifest["outputs"] == other["outputs"]
    assert manifest["status"] == "passed"
    assert set(manifest["outputs"]) == {"results.jsonl", "report.csv"}


def test_cli_seed_changes_records(tmp_path):
    cfg = write(tmp_path, LOOP_LAW)
    cli.main(["loop-law", "--config", str(cfg), "--out", str(tmp_path / "a"), "-q"])
    cli.main(["loop-law", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "4", "-q"])
    assert (tmp_path / "a" / "results.jsonl").read_bytes() != (tmp_path / "b" / "results.jsonl").read_bytes()


def test_cli_workers_env(tmp_path, monkeypatch):
    monkeypatch.setenv("USTLOOP_WORKERS", "nope")
    assert cli.main(["loop-law", "--config", str(write(tmp_path, LOOP_LAW)), "-q"]) == 2
    monkeypatch.setenv("USTLOOP_WORKERS", "2")
    assert cli._workers(None) == 2 and cli._workers(1) == 1


def test_manifest_written_before_computation(tmp_path, monkeypatch):
    seen = {}

    def fake(cfg, workers):
        seen.update(json.loads((tmp_path / "manifest.json").read_text()))
        return ExperimentResult([{"x": 1}], [StatReport("ok", "rel_err", 0.0, 0.0, 1.0, True, 1)])

    monkeypatch.setattr(harness, "run_experiment", fake)
    assert harness.run(parse_config(LOOP_LAW), tmp_path) == 0
    assert seen["status"] == "started"
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "passed"


def test_numeric_error_gives_exit_one(tmp_path, monkeypatch):
    def boom(cfg, workers):
        raise SingularSystem("no Dirichlet boundary")

    monkeypatch.setattr(harness, "run_experiment", boom)
    assert harness.run(parse_config(LOOP_LAW), tmp_path) == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "failed" and "SingularSystem" in manifest["error"]


def test_failing_report_gives_exit_one(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_experiment", lambda cfg, workers: ExperimentResult(
        [], [StatReport("bad", "chi2", 1.0, 1e-9, 0.01, False, 10),
             StatReport("info", "ks", 1.0, 1e-9, 0.01, False, 10, informational=True)]))
    assert harness.run(parse_config(LOOP_LAW), tmp_path) == 1
    assert json.loads((tmp_path / "manifest.json").read_text())["failures"] == ["bad"]


def test_config_model_is_frozen_to_known_experiments():
    assert isinstance(parse_config(LOOP_LAW), ExperimentConfig)
    with pytest.raises(ConfigInvalid):
        parse_config({**LOOP_LAW, "experiment": "not-an-experiment"})
