"""Report JSON documents written by every CLI command."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from src.errors import SerializationError
from src.models import Decision

REPORT_FORMAT = "causal-flow-report/1"

_NUMBER_OR_NULL = {"type": ["number", "null"]}

DIRECTION_SCHEMA = {
    "type": "object",
    "required": ["loglik_forward", "loglik_backward", "R", "threshold", "decision", "fit_meta"],
    "properties": {
        "loglik_forward": {"type": "number"},
        "loglik_backward": {"type": "number"},
        "R": {"type": "number"},
        "threshold": {"type": "number", "minimum": 0},
        "decision": {"enum": [d.value for d in Decision]},
        "fit_meta": {
            "type": "object",
            "required": ["seed", "config_digest", "n_train", "n_test"],
        },
    },
}

ORDERING_SCHEMA = {
    "type": "object",
    "required": ["best", "ranking", "fit_meta"],
    "properties": {
        "best": {"type": "array", "items": {"type": "string"}},
        "tied": {"type": "boolean"},
        "ranking": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["ordering", "test_loglik"],
                "properties": {"test_loglik": {"type": "number"}},
            },
        },
    },
}

INTERVENTION_SCHEMA = {
    "type": "object",
    "required": ["target", "value", "mode", "n_samples", "mean", "stderr"],
    "properties": {
        "mean": {"type": "array", "items": {"type": "number"}},
        "stderr": {"type": "array", "items": {"type": "number"}},
    },
}

COUNTERFACTUAL_SCHEMA = {
    "type": "object",
    "required": ["target", "value", "x_obs", "x_counterfactual"],
    "properties": {
        "x_obs": {"type": "array", "items": {"type": "number"}},
        "x_counterfactual": {"type": "array", "items": {"type": "number"}},
    },
}

SIMULATE_SCHEMA = {
    "type": "object",
    "required": ["data", "truth", "n", "d", "true_ordering", "generating_params"],
}

BENCHMARK_SCHEMA = {
    "type": "object",
    "required": ["rows", "n_rows", "overall_accuracy", "accuracy"],
    "properties": {
        "n_rows": {"type": "integer", "minimum": 0},
        "overall_accuracy": _NUMBER_OR_NULL,
        "accuracy": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "architecture", "N", "accuracy", "n"],
                "properties": {"accuracy": _NUMBER_OR_NULL},
            },
        },
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["rows", "n_rows", "worst_mse", "mse"],
    "properties": {
        "n_rows": {"type": "integer", "minimum": 0},
        "worst_mse": _NUMBER_OR_NULL,
        "mse": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["query", "target", "response", "N", "mse"],
                "properties": {"mse": _NUMBER_OR_NULL},
            },
        },
    },
}

RESULT_SCHEMAS = {
    "discover": DIRECTION_SCHEMA,
    "order": ORDERING_SCHEMA,
    "intervene": INTERVENTION_SCHEMA,
    "counterfactual": COUNTERFACTUAL_SCHEMA,
    "simulate": SIMULATE_SCHEMA,
    "benchmark": BENCHMARK_SCHEMA,
    "sweep": SWEEP_SCHEMA,
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["format", "command", "argv", "seed", "config", "config_digest", "results", "wall_clock"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": REPORT_FORMAT},
        "command": {"enum": sorted(RESULT_SCHEMAS)},
        "argv": {"type": "array", "items": {"type": "string"}},
        "seed": {"type": "integer", "minimum": 0},
        "config": {"type": "object"},
        "config_digest": {"type": ["string", "null"]},
        "results": {"type": "object"},
        "wall_clock": {"type": "number", "minimum": 0},
    },
}


def jsonable(value: Any) -> Any:
    """numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class Report:
    command: str
    argv: list[str]
    seed: int
    config: dict
    config_digest: str | None
    results: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return jsonable(
            {
                "format": REPORT_FORMAT,
                "command": self.command,
                "argv": list(self.argv),
                "seed": self.seed,
                "config": self.config,
                "config_digest": self.config_digest,
                "results": self.results,
                "wall_clock": round(self.wall_clock, 6),
            }
        )

    def to_json(self) -> str:
        document = self.to_dict()
        validate_report(document)
        return json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n"


def validate_report(document: dict) -> None:
    try:
        jsonschema.validate(document, REPORT_SCHEMA)
        jsonschema.validate(document["results"], RESULT_SCHEMAS[document["command"]])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SerializationError(f"malformed report at {path}: {exc.message}") from None


def write_report(report: Report, path: str | Path | None, stream) -> None:
    """Write the report JSON to ``stream`` and, when given, to ``path``."""
    text = report.to_json()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    stream.write(text)
