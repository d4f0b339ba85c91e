"""Gradient-boosted tree ensemble: model file parsing and inference.

Model interchange format (JSON, documented in the README):

    {
      "objective": "binary_logistic",
      "base_score": <float, raw-margin space>,
      "learning_rate": <float, metadata>,
      "n_estimators": <int, metadata>,
      "max_depth": <int, metadata>,
      "version": <string, optional>,
      "feature_names": ["HR", ...],
      "trees": [<node>, ...]
    }

where an internal <node> is
    {"feature_index": i, "threshold": t, "default_left": bool,
     "left": <node>, "right": <node>}
and a leaf is {"leaf_value": v}.  Leaf values are stored already scaled, so
the margin is simply base_score plus one leaf per tree.  Absent feature
values route through each node's default_left flag (true when omitted).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from sepserve.records.types import ClinicalDocument

_LEAF = -1


class ModelError(ValueError):
    pass


class MalformedModelError(ModelError):
    def __init__(self, location: str, detail: str):
        self.location = location
        super().__init__(f"{location}: {detail}")


class UnsupportedObjectiveError(ModelError):
    pass


class IculosOutOfRangeError(ValueError):
    def __init__(self, patient_id: str, at_iculos: int, axis: Sequence[int]):
        self.patient_id = patient_id
        self.at_iculos = at_iculos
        span = f"[{axis[0]}, {axis[-1]}]" if axis else "[]"
        super().__init__(
            f"hour {at_iculos} not on document axis {span} for {patient_id}"
        )


@dataclass
class DecisionTree:
    """One tree flattened to parallel arrays for fast iterative evaluation."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    default_left: list[bool] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    depth: int = 0

    def add_node(self, node: dict, path: str, n_features: int, depth: int) -> int:
        self.depth = max(self.depth, depth)
        idx = len(self.feature)
        if "leaf_value" in node:
            value = node["leaf_value"]
            if not isinstance(value, (int, float)):
                raise MalformedModelError(path, "leaf_value must be a number")
            self.feature.append(_LEAF)
            self.threshold.append(0.0)
            self.default_left.append(True)
            self.left.append(-1)
            self.right.append(-1)
            self.value.append(float(value))
            return idx
        for key in ("feature_index", "threshold", "left", "right"):
            if key not in node:
                raise MalformedModelError(path, f"internal node missing {key!r}")
        fidx = node["feature_index"]
        if not isinstance(fidx, int) or not (0 <= fidx < n_features):
            raise MalformedModelError(
                path, f"feature_index {fidx!r} out of range [0, {n_features})"
            )
        self.feature.append(fidx)
        self.threshold.append(float(node["threshold"]))
        self.default_left.append(bool(node.get("default_left", True)))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.left[idx] = self.add_node(node["left"], path + ".left", n_features, depth + 1)
        self.right[idx] = self.add_node(node["right"], path + ".right", n_features, depth + 1)
        return idx

    def evaluate(self, values: Sequence[Optional[float]]) -> float:
        i = 0
        while self.feature[i] != _LEAF:
            v = values[self.feature[i]]
            if v is None:
                i = self.left[i] if self.default_left[i] else self.right[i]
            elif v < self.threshold[i]:
                i = self.left[i]
            else:
                i = self.right[i]
        return self.value[i]


@dataclass
class TreeEnsembleModel:
    trees: list[DecisionTree]
    base_score: float
    feature_names: list[str]
    objective: str = "binary_logistic"
    learning_rate: Optional[float] = None
    n_estimators: Optional[int] = None
    max_depth: Optional[int] = None
    version: str = ""

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def parse_model(
    data: Union[bytes, str, dict], *, source: Optional[str] = None
) -> TreeEnsembleModel:
    """Parse and structurally validate a serialized ensemble.

    Rejects unknown objectives, out-of-range feature indices, and trees
    deeper than the declared max_depth.
    """
    if isinstance(data, (bytes, str)):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedModelError(source or "<model>", f"not valid JSON: {exc}")
    else:
        raw = data
    if not isinstance(raw, dict):
        raise MalformedModelError(source or "<model>", "top level must be an object")

    objective = raw.get("objective", "binary_logistic")
    if objective != "binary_logistic":
        raise UnsupportedObjectiveError(f"unsupported objective {objective!r}")

    feature_names = raw.get("feature_names")
    if not isinstance(feature_names, list) or not all(
        isinstance(n, str) for n in feature_names
    ):
        raise MalformedModelError("feature_names", "must be a list of strings")

    trees_raw = raw.get("trees")
    if not isinstance(trees_raw, list):
        raise MalformedModelError("trees", "must be a list")

    declared_depth = raw.get("max_depth")
    trees: list[DecisionTree] = []
    for t, node in enumerate(trees_raw):
        tree = DecisionTree()
        tree.add_node(node, f"trees[{t}]", len(feature_names), depth=0)
        if declared_depth is not None and tree.depth > declared_depth:
            raise MalformedModelError(
                f"trees[{t}]", f"depth {tree.depth} exceeds declared max_depth {declared_depth}"
            )
        trees.append(tree)

    version = raw.get("version")
    if not version:
        canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
        version = hashlib.sha256(canon.encode()).hexdigest()[:12]

    return TreeEnsembleModel(
        trees=trees,
        base_score=float(raw.get("base_score", 0.0)),
        feature_names=list(feature_names),
        objective=objective,
        learning_rate=raw.get("learning_rate"),
        n_estimators=raw.get("n_estimators"),
        max_depth=declared_depth,
        version=str(version),
    )


def load_model(path: Union[str, Path]) -> TreeEnsembleModel:
    return parse_model(Path(path).read_bytes(), source=str(path))


def bundled_model_path() -> Path:
    """Reference 200-tree model shipped with the package."""
    return Path(__file__).parent / "data" / "model.json"


def extract_features(
    doc: ClinicalDocument, at_iculos: int, feature_names: Sequence[str]
) -> list[Optional[float]]:
    """Assemble the model's feature vector from one document hour.

    Resolution order: vitals series, labs series, demographics, the hour
    itself (ICULOS), then derived scores (sirs / sofa).  Names the document
    cannot supply stay None and route through default directions.
    """
    axis = doc.iculos
    if at_iculos not in axis:
        raise IculosOutOfRangeError(doc.patient_id, at_iculos, axis)
    idx = at_iculos - axis[0]  # axis is contiguous

    values: list[Optional[float]] = []
    for name in feature_names:
        if name in doc.vitals:
            values.append(doc.vitals[name][idx])
        elif name in doc.labs:
            values.append(doc.labs[name][idx])
        elif name in doc.demographics:
            values.append(doc.demographics[name])
        elif name == "ICULOS":
            values.append(float(at_iculos))
        elif name in doc.derived_scores:
            score = doc.derived_scores[name][idx]
            values.append(None if score is None else float(score))
        else:
            values.append(None)
    return values


def predict_margin(
    model: TreeEnsembleModel, values: Sequence[Optional[float]]
) -> float:
    """Raw additive margin: base_score plus one reached leaf per tree."""
    margin = model.base_score
    for tree in model.trees:
        margin += tree.evaluate(values)
    return margin


def sigmoid(margin: float) -> float:
    # Numerically stable logistic; clamped into the open interval so finite
    # margins never round to exactly 0 or 1.
    if margin >= 0:
        p = 1.0 / (1.0 + math.exp(-margin))
    else:
        e = math.exp(margin)
        p = e / (1.0 + e)
    if p <= 0.0:
        return math.nextafter(0.0, 1.0)
    if p >= 1.0:
        return math.nextafter(1.0, 0.0)
    return p


def predict_probability(
    model: TreeEnsembleModel, values: Sequence[Optional[float]]
) -> float:
    return sigmoid(predict_margin(model, values))
