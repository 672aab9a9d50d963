"""Versioned JSON persistence for tree ensembles (round-trips predictions exactly)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..errors import SchemaError
from .boosting import TreeEnsemble
from .trees import TreeNode

__all__ = ["MODEL_FORMAT", "MODEL_VERSION", "ensemble_to_dict", "ensemble_from_dict", "save_model", "load_model"]

MODEL_FORMAT = "streamtwin-model"
MODEL_VERSION = 1


def _node_to_dict(node: TreeNode) -> dict[str, Any]:
    if node.is_leaf:
        return {"weight": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "missing": "left" if node.missing_left else "right",
        "gain": node.gain,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict[str, Any]) -> TreeNode:
    if "weight" in data:
        return TreeNode(weight=float(data["weight"]))
    try:
        return TreeNode(
            feature=int(data["feature"]),
            threshold=float(data["threshold"]),
            missing_left=data["missing"] == "left",
            gain=float(data["gain"]),
            left=_node_from_dict(data["left"]),
            right=_node_from_dict(data["right"]),
        )
    except KeyError as exc:
        raise SchemaError(f"malformed tree node: missing {exc}") from exc


def ensemble_to_dict(ensemble: TreeEnsemble, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "base_score": ensemble.base_score,
        "learning_rate": ensemble.learning_rate,
        "feature_names": list(ensemble.feature_names),
        "trees": [_node_to_dict(tree) for tree in ensemble.trees],
    }
    if extra:
        payload.update(extra)
    return payload


def ensemble_from_dict(data: dict[str, Any]) -> TreeEnsemble:
    if data.get("format") != MODEL_FORMAT:
        raise SchemaError(f"not a {MODEL_FORMAT} payload: format={data.get('format')!r}")
    if data.get("version") != MODEL_VERSION:
        raise SchemaError(f"unsupported model version {data.get('version')!r}")
    return TreeEnsemble(
        base_score=float(data["base_score"]),
        learning_rate=float(data["learning_rate"]),
        feature_names=[str(name) for name in data["feature_names"]],
        trees=[_node_from_dict(tree) for tree in data["trees"]],
    )


def save_model(ensemble: TreeEnsemble, path: str | Path, extra: dict[str, Any] | None = None) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(ensemble, extra), indent=2))


def load_model(path: str | Path) -> TreeEnsemble:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {path}") from exc
    return ensemble_from_dict(data)
