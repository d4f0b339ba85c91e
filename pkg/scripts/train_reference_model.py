#!/usr/bin/env python3
"""Train the bundled reference tree ensemble and freeze it as JSON.

Offline tooling: generates a synthetic-but-plausible ICU cohort, fits a
200-tree depth-3 gradient boosting classifier (learning_rate 0.01,
log-loss), converts it to the repo's model interchange format, verifies the
conversion node-by-node against the sklearn decision function, and writes

    src/sepserve/data/model.json
    tests/fixtures/model_expected.json   (frozen vectors + expected outputs)

Run from the repo root:  python scripts/train_reference_model.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier
from sklearn.metrics import roc_auc_score

ROOT = Path(__file__).resolve().parent.parent

VITALS = ["HR", "O2Sat", "Temp", "SBP", "MAP", "DBP", "Resp", "EtCO2"]
LABS = [
    "BaseExcess", "HCO3", "FiO2", "pH", "PaCO2", "SaO2", "AST", "BUN",
    "Alkalinephos", "Calcium", "Chloride", "Creatinine", "Bilirubin_direct",
    "Glucose", "Lactate", "Magnesium", "Phosphate", "Potassium",
    "Bilirubin_total", "TroponinI", "Hct", "Hgb", "PTT", "WBC",
    "Fibrinogen", "Platelets",
]
DEMOGRAPHICS = ["Age", "Gender", "Unit1", "Unit2", "HospAdmTime"]
FEATURES = VITALS + LABS + DEMOGRAPHICS + ["ICULOS", "sirs", "sofa"]

N_ESTIMATORS = 200
MAX_DEPTH = 3
LEARNING_RATE = 0.01
SEED = 20240915


def _sirs(hr, temp, resp, paco2, wbc):
    score = np.zeros(len(hr))
    score += ((temp > 38.0) | (temp < 36.0)).astype(float)
    score += (hr > 90.0).astype(float)
    score += ((resp > 20.0) | (paco2 < 32.0)).astype(float)
    score += ((wbc > 12.0) | (wbc < 4.0)).astype(float)
    return score


def _band_low_bad(v, cuts):
    score = np.full(len(v), len(cuts), dtype=float)
    for i, c in enumerate(cuts):
        score = np.where((score == len(cuts)) & (v >= c), i, score)
    return score


def _band_high_bad(v, cuts):
    score = np.full(len(v), len(cuts), dtype=float)
    for i, c in enumerate(cuts):
        score = np.where((score == len(cuts)) & (v < c), i, score)
    return score


def make_cohort(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    c = {}
    c["HR"] = np.clip(rng.normal(86, 16, n), 35, 200)
    c["O2Sat"] = np.clip(rng.normal(96.5, 2.5, n), 70, 100)
    c["Temp"] = np.clip(rng.normal(36.9, 0.8, n), 33, 41.5)
    c["SBP"] = np.clip(rng.normal(121, 19, n), 60, 220)
    c["MAP"] = np.clip(rng.normal(82, 13, n), 35, 160)
    c["DBP"] = np.clip(rng.normal(64, 11, n), 25, 130)
    c["Resp"] = np.clip(rng.normal(18.5, 4.5, n), 6, 50)
    c["EtCO2"] = np.clip(rng.normal(38, 5, n), 15, 70)
    c["BaseExcess"] = rng.normal(0, 3, n)
    c["HCO3"] = np.clip(rng.normal(24, 3.2, n), 8, 45)
    c["FiO2"] = np.clip(rng.normal(0.38, 0.16, n), 0.21, 1.0)
    c["pH"] = np.clip(rng.normal(7.38, 0.06, n), 6.9, 7.7)
    c["PaCO2"] = np.clip(rng.normal(40, 7, n), 15, 90)
    c["SaO2"] = np.clip(rng.normal(96.5, 2.5, n), 65, 100)
    c["AST"] = np.clip(rng.lognormal(3.5, 0.6, n), 8, 2000)
    c["BUN"] = np.clip(rng.normal(19, 9, n), 3, 120)
    c["Alkalinephos"] = np.clip(rng.normal(85, 32, n), 20, 500)
    c["Calcium"] = np.clip(rng.normal(8.5, 0.7, n), 5, 13)
    c["Chloride"] = np.clip(rng.normal(104, 4.5, n), 80, 130)
    c["Creatinine"] = np.clip(rng.lognormal(0.0, 0.5, n), 0.2, 12)
    c["Bilirubin_direct"] = np.clip(rng.lognormal(-1.4, 0.7, n), 0.01, 20)
    c["Glucose"] = np.clip(rng.normal(132, 42, n), 40, 500)
    c["Lactate"] = np.clip(rng.lognormal(0.45, 0.55, n), 0.4, 18)
    c["Magnesium"] = np.clip(rng.normal(2.0, 0.3, n), 1, 4)
    c["Phosphate"] = np.clip(rng.normal(3.5, 0.9, n), 1, 10)
    c["Potassium"] = np.clip(rng.normal(4.1, 0.5, n), 2.2, 7.5)
    c["Bilirubin_total"] = np.clip(rng.lognormal(-0.2, 0.7, n), 0.1, 30)
    c["TroponinI"] = np.clip(rng.lognormal(-3.2, 1.2, n), 0.0, 50)
    c["Hct"] = np.clip(rng.normal(31, 5.3, n), 15, 55)
    c["Hgb"] = np.clip(rng.normal(10.5, 1.9, n), 5, 19)
    c["PTT"] = np.clip(rng.normal(33, 9, n), 15, 150)
    c["WBC"] = np.clip(rng.lognormal(2.3, 0.42, n), 0.5, 60)
    c["Fibrinogen"] = np.clip(rng.normal(310, 90, n), 60, 900)
    c["Platelets"] = np.clip(rng.normal(215, 85, n), 10, 800)
    c["Age"] = np.clip(rng.normal(63, 15, n), 18, 100)
    c["Gender"] = rng.integers(0, 2, n).astype(float)
    c["Unit1"] = rng.integers(0, 2, n).astype(float)
    c["Unit2"] = 1.0 - c["Unit1"]
    c["HospAdmTime"] = -np.clip(rng.exponential(30, n), 0, 400)
    c["ICULOS"] = rng.integers(1, 96, n).astype(float)
    c["sirs"] = _sirs(c["HR"], c["Temp"], c["Resp"], c["PaCO2"], c["WBC"])
    c["sofa"] = (
        _band_low_bad(c["Platelets"], [150, 100, 50, 20])
        + _band_high_bad(c["Bilirubin_total"], [1.2, 2.0, 6.0, 12.0])
        + _band_low_bad(c["MAP"], [70.0])
        + _band_high_bad(c["Creatinine"], [1.2, 2.0, 3.5, 5.0])
        + _band_low_bad(c["SaO2"] / c["FiO2"], [400, 316, 232, 148])
    )

    X = np.column_stack([c[f] for f in FEATURES])

    risk = (
        0.030 * (c["HR"] - 86)
        + 0.70 * np.abs(c["Temp"] - 36.9)
        + 0.060 * (c["Resp"] - 18.5)
        - 0.030 * (c["MAP"] - 82)
        - 0.080 * (c["O2Sat"] - 96.5)
        + 0.45 * (c["Lactate"] - 1.8)
        + 0.055 * np.abs(c["WBC"] - 9.5)
        + 0.50 * (c["Creatinine"] - 1.1)
        - 0.004 * (c["Platelets"] - 215)
        + 0.35 * (c["Bilirubin_total"] - 1.0)
        + 0.012 * (c["Age"] - 63)
        + 0.40 * c["sirs"]
        + 0.25 * c["sofa"]
        + 0.010 * (c["ICULOS"] - 48)
    )
    risk = (risk - risk.mean()) / risk.std()
    p = 1.0 / (1.0 + np.exp(-(1.6 * risk - 1.1)))
    y = (rng.random(n) < p).astype(int)
    return X, y


def node_to_dict(tree, node: int, lr: float) -> dict:
    if tree.children_left[node] == -1:
        return {"leaf_value": float(lr * tree.value[node][0][0])}
    # sklearn routes v <= threshold left; our format routes v < threshold
    # left, so bump the threshold one ulp to keep tie behavior identical.
    return {
        "feature_index": int(tree.feature[node]),
        "threshold": math.nextafter(float(tree.threshold[node]), math.inf),
        "default_left": True,
        "left": node_to_dict(tree, tree.children_left[node], lr),
        "right": node_to_dict(tree, tree.children_right[node], lr),
    }


def walk(node: dict, values: list) -> float:
    while "leaf_value" not in node:
        v = values[node["feature_index"]]
        if v is None:
            node = node["left"] if node["default_left"] else node["right"]
        elif v < node["threshold"]:
            node = node["left"]
        else:
            node = node["right"]
    return node["leaf_value"]


def margin_of(model: dict, values: list) -> float:
    # left-to-right accumulation from base_score: the margin semantics the
    # runtime evaluator is held bit-exact against
    margin = model["base_score"]
    for tree in model["trees"]:
        margin += walk(tree, values)
    return margin


def main() -> None:
    rng = np.random.default_rng(SEED)
    X, y = make_cohort(rng, 6000)
    X_hold, y_hold = make_cohort(rng, 1500)

    clf = GradientBoostingClassifier(
        loss="log_loss",
        learning_rate=LEARNING_RATE,
        n_estimators=N_ESTIMATORS,
        max_depth=MAX_DEPTH,
        random_state=SEED,
    )
    clf.fit(X, y)
    print(f"train AUC: {roc_auc_score(y, clf.decision_function(X)):.3f}")
    print(f"holdout AUC: {roc_auc_score(y_hold, clf.decision_function(X_hold)):.3f}")

    # base margin = decision_function minus the summed scaled leaf values
    trees = [est[0].tree_ for est in clf.estimators_]
    probe = X_hold[:8]
    raw = clf.decision_function(probe)
    leaf_sum = np.sum(
        [LEARNING_RATE * t.predict(probe.astype(np.float32)).ravel()
         for t in [est[0] for est in clf.estimators_]],
        axis=0,
    )
    base_candidates = raw - leaf_sum
    base_score = float(base_candidates[0])
    assert np.allclose(base_candidates, base_score, atol=1e-9), base_candidates

    model = {
        "objective": "binary_logistic",
        "base_score": base_score,
        "learning_rate": LEARNING_RATE,
        "n_estimators": N_ESTIMATORS,
        "max_depth": MAX_DEPTH,
        "version": "ref-200x3-v1",
        "feature_names": FEATURES,
        "trees": [node_to_dict(t, 0, LEARNING_RATE) for t in trees],
    }

    # cross-check the JSON against sklearn on fully observed vectors
    for i in range(len(probe)):
        values = [float(v) for v in probe[i]]
        margin = margin_of(model, values)
        assert abs(margin - raw[i]) < 1e-8, (margin, raw[i])
    print("conversion verified against sklearn decision_function")

    out = ROOT / "src" / "sepserve" / "data" / "model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(model, separators=(",", ":")) + "\n")
    print(f"wrote {out} ({out.stat().st_size / 1024:.0f} KiB)")

    # frozen fixture vectors: 6 fully observed + 4 with missing entries
    vec_rng = np.random.default_rng(SEED + 1)
    X_fix, _ = make_cohort(vec_rng, 6)
    vectors: list[list] = [[float(v) for v in row] for row in X_fix]
    for k in range(4):
        row = [float(v) for v in X_fix[k]]
        for j in vec_rng.choice(len(FEATURES), size=8, replace=False):
            row[int(j)] = None
        vectors.append(row)
    margins = [margin_of(model, vec) for vec in vectors]
    probabilities = [1.0 / (1.0 + math.exp(-m)) for m in margins]
    expected = {
        "model_version": model["version"],
        "feature_names": FEATURES,
        "vectors": vectors,
        "expected_margins": margins,
        "expected_probabilities": probabilities,
    }
    fix = ROOT / "tests" / "fixtures" / "model_expected.json"
    fix.parent.mkdir(parents=True, exist_ok=True)
    fix.write_text(json.dumps(expected, indent=2) + "\n")
    print(f"wrote {fix}")


if __name__ == "__main__":
    main()
