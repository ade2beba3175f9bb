"""Experiment configuration schema."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigInvalid
from .stats import KS_MIN_SAMPLES

EXPERIMENTS = (
    "sample-ust",
    "loop-law",
    "verify-identities",
    "rn-derivative",
    "converge-dets",
    "inversion-symmetry",
    "sle-compare",
)
Experiment = Literal[
    "sample-ust",
    "loop-law",
    "verify-identities",
    "rn-derivative",
    "converge-dets",
    "inversion-symmetry",
    "sle-compare",
]

KS_EXPERIMENTS = ("inversion-symmetry", "sle-compare")
RUN_ONLY_FIELDS = {"output_dir", "workers"}

# thresholds used when the config does not override them; every one is echoed in the report
DEFAULT_TOLERANCES = {
    "p_value": 0.01,
    "identity_rel": 1e-8,
    "rn_rel": 1e-6,
    "loop_sum": 1e-10,
    "converge_final": 0.02,
    "converge_violations": 1,
    "rn_sigma": 3.0,
    "fredholm_rel": 1e-6,
    "touch_cap": 0.3,
    "zero_trace": 1e-6,
    "besq_sigma": 3.0,
}


class GeometrySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["annulus", "square-annulus", "disk"] = "annulus"
    center: tuple[float, float] = (0.0, 0.0)
    inner_radius: float = 1.0
    outer_radius: float = 4.0
    size: int = 24
    hole: int = 8
    cut_radius: float = 2.0
    d_radii: tuple[float, float] = (1.5, 3.0)
    probe_radius: float = 0.5
    epsilon: float | None = None

    @model_validator(mode="after")
    def _radii(self):
        if self.kind == "annulus" and not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")
        if self.kind == "square-annulus" and (self.hole <= 0 or (self.size - self.hole) % 2):
            raise ValueError("square annulus needs hole > 0 and size - hole even")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: Experiment
    geometry: GeometrySpec = Field(default_factory=GeometrySpec)
    mesh_list: list[float] = Field(default_factory=lambda: [1 / 32])
    replicates: int = 1
    master_seed: int = 0
    tolerances: dict[str, float] = Field(default_factory=dict)
    output_dir: str = "ustloop-out"
    workers: int = 1
    negative_control: bool = True

    @field_validator("replicates")
    @classmethod
    def _replicates(cls, v):
        if v < 1:
            raise ValueError("replicates must be >= 1")
        return v

    @field_validator("master_seed")
    @classmethod
    def _seed(cls, v):
        if not 0 <= v < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        return v

    @field_validator("mesh_list")
    @classmethod
    def _meshes(cls, v):
        if not v or any(m <= 0 for m in v):
            raise ValueError("mesh_list must be a non-empty list of positive spacings")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("mesh_list must be strictly decreasing")
        return v

    @field_validator("tolerances")
    @classmethod
    def _tolerances(cls, v):
        unknown = set(v) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return v

    @field_validator("workers")
    @classmethod
    def _workers(cls, v):
        if v < 1:
            raise ValueError("workers must be >= 1")
        return v

    @model_validator(mode="after")
    def _ks_sample_size(self):
        if self.experiment in KS_EXPERIMENTS and self.replicates < KS_MIN_SAMPLES:
            raise ValueError(f"{self.experiment} runs a KS test and needs replicates >= {KS_MIN_SAMPLES}")
        return self

    def tolerance(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def canonical_json(self) -> str:
        """Inputs that determine the results; where and how wide the run goes is left out."""
        data = self.model_dump(mode="json", exclude=RUN_ONLY_FIELDS)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(data)
