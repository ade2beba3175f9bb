"""Run an experiment to disk: manifest first, then JSONL records and CSV reports."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path

from . import __version__
from .config import ExperimentConfig
from .errors import UstLoopError
from .experiments import ExperimentResult, run_experiment
from .stats import StatReport

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def git_blob_hash(data: bytes) -> str:
    """Content hash in git's blob format: sha1 of 'blob <len>\\0' + data."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, float) and x != x:
        return None
    return x


def write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps({k: _jsonable(v) for k, v in rec.items()}, sort_keys=True) + "\n")


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    fields = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def run(config: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None) -> int:
    """Run ``config`` and return the exit code (0 all checks pass, 1 otherwise)."""
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    canonical = config.canonical_json().encode()
    manifest = {
        "experiment": config.experiment,
        "config": json.loads(canonical),
        "config_sha1_blob": git_blob_hash(canonical),
        "config_sha256": hashlib.sha256(canonical).hexdigest(),
        "package_version": __version__,
        "run": {"output_dir": str(out), "workers": workers or config.workers},
        "status": "started",
    }
    manifest_path = out / "manifest.json"
    _write_json(manifest_path, manifest)

    try:
        result = run_experiment(config, workers)
    except UstLoopError as exc:
        name = type(exc).__name__
        log.error("%s failed: %s: %s", config.experiment, name, exc)
        result = ExperimentResult([], [StatReport(f"error:{name}", "rel_err", float("nan"), float("nan"),
                                                  0.0, False, 0)])
        manifest["error"] = f"{name}: {exc}"

    write_jsonl(out / "results.jsonl", result.records)
    write_csv(out / "report.csv", [r.row() for r in result.reports])
    for name, rows in result.tables.items():
        write_csv(out / f"{name}.csv", rows)

    outputs = sorted(p for p in out.iterdir() if p.name != "manifest.json" and p.is_file())
    manifest["outputs"] = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in outputs}
    manifest["failures"] = result.failures
    manifest["status"] = "passed" if result.passed else "failed"
    _write_json(manifest_path, manifest)
    for rep in result.reports:
        flag = "info" if rep.informational else ("PASS" if rep.passed else "FAIL")
        log.info("%-4s %s %s=%.6g threshold=%.3g n=%d", flag, rep.name, rep.test, rep.value, rep.threshold, rep.n)
    return EXIT_PASS if result.passed else EXIT_FAIL
