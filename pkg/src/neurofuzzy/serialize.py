"""JSON model files for trained ANFIS and BNN regressors.

Floats are written with ``repr`` precision by :mod:`json`, so a load
reproduces the in-memory parameters bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import FEATURES, TARGET, MinMaxScaler
from .errors import SchemaError
from .fuzzy import AnfisModel, GaussianMf, InputPartition
from .mlp import BnnRegressor, MlpModel

SCHEMA_VERSION = 1


def anfis_to_dict(model: AnfisModel, target=TARGET) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "anfis",
        "feature_names": list(model.feature_names),
        "target_name": target,
        "membership": "gaussian",
        "inputs": [
            {
                "name": p.name,
                "lo": p.lo,
                "hi": p.hi,
                "centers": p.centers.tolist(),
                "sigmas": p.sigmas.tolist(),
            }
            for p in model.inputs
        ],
        "consequents": model.consequents.tolist(),
    }


def bnn_to_dict(reg: BnnRegressor) -> dict:
    net = reg.network
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "bnn",
        "feature_names": list(reg.feature_names),
        "target_name": reg.target_name,
        "layer_sizes": list(net.layer_sizes),
        "activation": net.activation,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "x_scaler": {"lo": reg.x_scaler.lo.tolist(), "hi": reg.x_scaler.hi.tolist()},
        "y_scaler": {"lo": reg.y_scaler.lo.tolist(), "hi": reg.y_scaler.hi.tolist()},
    }


def model_to_dict(model) -> dict:
    if isinstance(model, AnfisModel):
        return anfis_to_dict(model)
    if isinstance(model, BnnRegressor):
        return bnn_to_dict(model)
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    try:
        version = doc["schema_version"]
        kind = doc["kind"]
    except (KeyError, TypeError):
        raise SchemaError("model document lacks schema_version/kind") from None
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema version {version}")
    try:
        if kind == "anfis":
            inputs = tuple(
                InputPartition(
                    p["name"],
                    float(p["lo"]),
                    float(p["hi"]),
                    tuple(GaussianMf(float(c), float(s)) for c, s in zip(p["centers"], p["sigmas"])),
                )
                for p in doc["inputs"]
            )
            return AnfisModel(inputs, np.array(doc["consequents"], dtype=float))
        if kind == "bnn":
            names = tuple(doc.get("feature_names", FEATURES))
            net = MlpModel(
                tuple(np.array(w, dtype=float) for w in doc["weights"]),
                tuple(np.array(b, dtype=float) for b in doc["biases"]),
                doc.get("activation", "tanh"),
            )
            xs, ys = doc["x_scaler"], doc["y_scaler"]
            return BnnRegressor(
                net,
                MinMaxScaler(np.array(xs["lo"]), np.array(xs["hi"]), names),
                MinMaxScaler(np.array(ys["lo"]), np.array(ys["hi"]), (doc.get("target_name", TARGET),)),
                names,
                doc.get("target_name", TARGET),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed {kind} model document: {exc}") from exc
    raise SchemaError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a JSON model file ({exc})") from exc
    return model_from_dict(doc)
