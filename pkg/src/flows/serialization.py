"""Self-describing JSON documents for flow models."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from src.errors import SerializationError
from src.flows.base import BaseDistribution
from src.flows.layers import AffineLayer, FixedFunction, Part, VariableTransform
from src.flows.model import FlowModel
from src.flows.ordering import CausalOrdering
from src.flows.scaler import Scaler
from src.models import Activation, BaseKind
from src.nn.network import ConditionerNet

FORMAT = "causal-flow/1"


def _part_to_dict(part: Part, where: str) -> dict:
    if isinstance(part, FixedFunction):
        raise SerializationError(f"{where}: fixed conditioner {part.name!r} cannot be serialized")
    if isinstance(part, ConditionerNet):
        return {
            "net": {
                "layer_dims": list(part.layer_dims),
                "activation": part.activation.value,
                "negative_slope": part.negative_slope,
                "weights": [w.tolist() for w in part.weights],
                "biases": [b.tolist() for b in part.biases],
            }
        }
    return {"const": float(part)}


def _part_from_dict(data: dict) -> Part:
    if "const" in data:
        return float(data["const"])
    net = data["net"]
    return ConditionerNet(
        tuple(int(d) for d in net["layer_dims"]),
        tuple(np.asarray(w, dtype=np.float64) for w in net["weights"]),
        tuple(np.asarray(b, dtype=np.float64) for b in net["biases"]),
        Activation(net["activation"]),
        float(net["negative_slope"]),
    )


def model_to_dict(model: FlowModel) -> dict[str, Any]:
    layers = []
    for l, layer in enumerate(model.layers):
        layers.append(
            [
                {
                    "parents": list(vt.parents),
                    "log_scale": _part_to_dict(vt.log_scale, f"layer {l} x{j + 1} log_scale"),
                    "shift": _part_to_dict(vt.shift, f"layer {l} x{j + 1} shift"),
                }
                for j, vt in enumerate(layer.transforms)
            ]
        )
    scaler = None
    if model.scaler is not None:
        scaler = {"mean": model.scaler.mean.tolist(), "scale": model.scaler.scale.tolist()}
    return {
        "format": FORMAT,
        "ordering": list(model.ordering.ranks),
        "base": model.base.kind.value,
        "additive": model.additive,
        "fitted": model.fitted,
        "scaler": scaler,
        "layers": layers,
    }


def model_from_dict(data: dict[str, Any]) -> FlowModel:
    if data.get("format") != FORMAT:
        raise SerializationError(f"unsupported model format: {data.get('format')!r}")
    try:
        scaler = None
        if data["scaler"] is not None:
            scaler = Scaler(
                np.asarray(data["scaler"]["mean"], dtype=np.float64),
                np.asarray(data["scaler"]["scale"], dtype=np.float64),
            )
        layers = tuple(
            AffineLayer(
                tuple(
                    VariableTransform(
                        tuple(int(p) for p in vt["parents"]),
                        _part_from_dict(vt["log_scale"]),
                        _part_from_dict(vt["shift"]),
                    )
                    for vt in layer
                )
            )
            for layer in data["layers"]
        )
        return FlowModel(
            CausalOrdering(tuple(int(r) for r in data["ordering"])),
            layers,
            BaseDistribution(BaseKind(data["base"])),
            scaler,
            bool(data["additive"]),
            bool(data["fitted"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"malformed model document: {exc}") from exc


def save_model(model: FlowModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_model(path: str | Path) -> FlowModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read model {path}: {exc}") from exc
    return model_from_dict(data)
