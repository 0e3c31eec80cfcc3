"""Run configuration: YAML/JSON files merged with CLI flags and validated.

Precedence is built-in defaults < ``--config`` file < command-line flags.
Unknown keys are rejected at every level, with the closest valid key
suggested.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml
from rapidfuzz import process

from src.errors import ConfigurationError
from src.models import (
    BenchmarkGrid,
    Family,
    InterventionMode,
    NoiseKind,
    QuerySweep,
    SyntheticSpec,
    TrainConfig,
    parse_enum,
)

logger = logging.getLogger(__name__)

# ---- schema --------------------------------------------------------------------

_ARCHITECTURE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_layers_flow": {"type": "integer", "minimum": 1},
        "hidden_dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "activation": {"enum": ["leaky_relu", "tanh", "identity"]},
        "negative_slope": {"type": "number"},
    },
}

_TRAIN = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "epochs": {"type": "integer", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "betas": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "scheduler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "patience": {"type": "integer", "minimum": 1},
                "threshold": {"type": "number", "minimum": 0},
            },
        },
        "split_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "architecture": _ARCHITECTURE,
        "alternative_architectures": {"type": "array", "items": _ARCHITECTURE},
        "base_kind": {"enum": ["laplace", "gaussian"]},
        "additive_only": {"type": "boolean"},
        "decision_threshold": {"type": "number", "minimum": 0},
        "scale_clamp": {"type": "number", "exclusiveMinimum": 0},
    },
}

_QUERY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "target": {"type": ["integer", "null"], "minimum": 1},
        "value": {"type": ["number", "null"]},
        "n_samples": {"type": "integer", "minimum": 1},
        "mode": {"enum": [m.value for m in InterventionMode]},
        "obs": {"type": ["array", "null"], "items": {"type": "number"}},
    },
}

_SIMULATE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {"enum": [f.value for f in Family]},
        "n": {"type": "integer", "minimum": 1},
        "coeff": {"type": "number"},
        "noise_kind": {"enum": [k.value for k in NoiseKind]},
        "dof": {"type": "number"},
        "flip_direction": {"type": "boolean"},
        "forms": {"type": ["array", "null"], "items": {"enum": [1, 2, 3]}},
        "c1": {"type": ["number", "null"]},
        "c2": {"type": ["number", "null"]},
    },
}

_BENCHMARK = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "families": {"type": "array", "items": {"enum": [f.value for f in Family]}, "minItems": 1},
        "sample_sizes": {"type": "array", "items": {"type": "integer", "minimum": 10}, "minItems": 1},
        "reps": {"type": "integer", "minimum": 1},
        "noise_kind": {"enum": [k.value for k in NoiseKind]},
        "dof": {"type": "number"},
        "coeff": {"type": "number"},
        "random_flip": {"type": "boolean"},
        "architectures": {"type": "array", "items": _ARCHITECTURE},
    },
}

_PAIR = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1, "maximum": 4},
    "minItems": 2,
    "maxItems": 2,
}

_SWEEP = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "sample_sizes": {"type": "array", "items": {"type": "integer", "minimum": 10}, "minItems": 1},
        "reps": {"type": "integer", "minimum": 1},
        "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "interventions": {"type": "array", "items": _PAIR},
        "counterfactuals": {"type": "array", "items": _PAIR},
        "x_obs": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "n_samples": {"type": "integer", "minimum": 1},
        "mode": {"enum": [m.value for m in InterventionMode]},
        "noise_kind": {"enum": [k.value for k in NoiseKind]},
        "dof": {"type": "number"},
        "c1": {"type": ["number", "null"]},
        "c2": {"type": ["number", "null"]},
    },
}

_NULLABLE_STRING = {"type": ["string", "null"]}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": ["integer", "null"], "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "max_d": {"type": "integer", "minimum": 2},
        "data": _NULLABLE_STRING,
        "ordering": _NULLABLE_STRING,
        "model": _NULLABLE_STRING,
        "save_model": _NULLABLE_STRING,
        "out": _NULLABLE_STRING,
        "train": _TRAIN,
        "query": _QUERY,
        "simulate": _SIMULATE,
        "benchmark": _BENCHMARK,
        "sweep": _SWEEP,
    },
}


def default_document() -> dict[str, Any]:
    train = TrainConfig().to_dict()
    for key in ("seed", "n_jobs"):
        train.pop(key)
    return {
        "seed": None,
        "workers": 1,
        "max_d": 5,
        "data": None,
        "ordering": None,
        "model": None,
        "save_model": None,
        "out": None,
        "train": train,
        "query": {"target": None, "value": None, "n_samples": 1000, "mode": "sequential", "obs": None},
        "simulate": {
            "family": Family.NONLINEAR_ADDITIVE.value,
            "n": 500,
            "coeff": 1.0,
            "noise_kind": "laplace",
            "dof": 3.0,
            "flip_direction": False,
            "forms": None,
            "c1": None,
            "c2": None,
        },
        "benchmark": BenchmarkGrid().to_dict(),
        "sweep": QuerySweep().to_dict(),
    }


# ---- loading -------------------------------------------------------------------


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a YAML or JSON config file (JSON is valid YAML)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from None
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigurationError(f"config {path} must be a mapping at the top level")
    return document


def deep_merge(base: dict, override: dict) -> dict:
    """Merge ``override`` into a copy of ``base``; mappings merge, values replace."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _suggest(unknown: str, allowed: list[str]) -> str:
    match = process.extractOne(unknown, allowed, score_cutoff=60)
    return f" (did you mean {match[0]!r}?)" if match else ""


def validate_document(document: dict) -> None:
    validator = jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is None:
        return
    where = ".".join(str(p) for p in error.absolute_path) or "config"
    if error.validator == "additionalProperties":
        allowed = sorted(error.schema.get("properties", {}))
        unknown = sorted(set(error.instance) - set(allowed))
        prefix = f"{where}." if error.absolute_path else ""
        raise ConfigurationError(
            f"unknown key {prefix}{unknown[0]}{_suggest(unknown[0], allowed)}"
        )
    raise ConfigurationError(f"invalid {where}: {error.message}")


def entropy_seed() -> int:
    return int(np.random.SeedSequence().entropy % 2**32)


# ---- typed view ----------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    document: dict[str, Any]
    seed: int
    train: TrainConfig
    workers: int = 1

    @property
    def data(self) -> str | None:
        return self.document["data"]

    @property
    def ordering(self) -> str | None:
        return self.document["ordering"]

    @property
    def model(self) -> str | None:
        return self.document["model"]

    @property
    def save_model(self) -> str | None:
        return self.document["save_model"]

    @property
    def out(self) -> str | None:
        return self.document["out"]

    @property
    def max_d(self) -> int:
        return self.document["max_d"]

    @property
    def query(self) -> dict[str, Any]:
        return self.document["query"]

    @property
    def mode(self) -> InterventionMode:
        return parse_enum(InterventionMode, self.query["mode"], "mode")

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec.from_dict({**self.document["simulate"], "seed": self.seed})

    def benchmark_grid(self) -> BenchmarkGrid:
        return BenchmarkGrid.from_dict(self.document["benchmark"])

    def query_sweep(self) -> QuerySweep:
        return QuerySweep.from_dict(self.document["sweep"])

    def echo(self) -> dict[str, Any]:
        """The merged document with the resolved seed, for reports."""
        return {**self.document, "seed": self.seed}


def resolve_run_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """defaults < file < ``overrides``; a missing seed is drawn from entropy."""
    document = default_document()
    if config_path is not None:
        file_document = load_config_file(config_path)
        validate_document(file_document)
        document = deep_merge(document, file_document)
    if overrides:
        document = deep_merge(document, overrides)
    validate_document(document)

    seed = document["seed"]
    if seed is None:
        seed = entropy_seed()
        logger.info("no seed given, using %d", seed)
    workers = int(document["workers"])
    train = TrainConfig.from_dict({**document["train"], "seed": seed, "n_jobs": workers})
    return RunConfig(document=document, seed=seed, train=train, workers=workers)
