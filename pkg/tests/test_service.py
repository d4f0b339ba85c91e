import io
import json
import math

import pytest
from fastapi.testclient import TestClient

from sepserve.gbdt import bundled_model_path, extract_features, predict_probability
from sepserve.service import (
    PredictionResult,
    ServiceConfig,
    create_app,
    predict_for_patient,
    run_batch,
)
from tests.conftest import oracle_margin


@pytest.fixture(scope="module")
def service_config(seeded_store) -> ServiceConfig:
    return ServiceConfig(
        store_root=str(seeded_store.root),
        model_path=str(bundled_model_path()),
        replica_id="t0",
    )


@pytest.fixture(scope="module")
def client(service_config) -> TestClient:
    app = create_app(service_config)
    with TestClient(app, raise_server_exceptions=False) as tc:
        yield tc


def test_health_ready(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["replica_id"] == "t0"
    assert body["model_version"]


def test_health_before_load_is_503_then_200(service_config):
    app = create_app(service_config, preload=False)
    with TestClient(app) as tc:
        assert tc.get("/health").status_code == 503
        assert tc.get("/health").json()["code"] == "not_ready"
        app.state.load()
        assert tc.get("/health").status_code == 200


def test_list_patients_matches_store(client, seeded_store):
    resp = client.get("/patients")
    assert resp.status_code == 200
    assert resp.json()["patients"] == seeded_store.list_patients()


def test_get_patient_bytes_identical_to_store(client, seeded_store):
    pid = seeded_store.list_patients()[0]
    resp = client.get(f"/patients/{pid}")
    assert resp.status_code == 200
    assert resp.content == seeded_store.get_raw(pid)


def test_every_listed_patient_is_retrievable(client):
    for pid in client.get("/patients").json()["patients"]:
        assert client.get(f"/patients/{pid}").status_code == 200


def test_structured_request_log_line(client, caplog):
    import logging

    with caplog.at_level(logging.INFO, logger="sepserve.service"):
        client.get("/health")
    messages = [r.getMessage() for r in caplog.records]
    line = next(m for m in messages if "latency_ms=" in m)
    assert "replica=" in line and "status=200" in line and "path=/health" in line


def test_get_unknown_patient_404(client):
    resp = client.get("/patients/zzz")
    assert resp.status_code == 404
    assert resp.json()["code"] == "patient_not_found"


def test_predict_matches_inference_oracle(client, seeded_store, model, raw_model):
    pid = "p000009"
    resp = client.post("/predict", json={"patient_id": pid})
    assert resp.status_code == 200
    body = resp.json()

    doc = seeded_store.get(pid)
    hour = doc.iculos[-1]  # default prediction hour: most recent data
    values = extract_features(doc, hour, model.feature_names)
    expected = predict_probability(model, values)
    assert body["probability"] == pytest.approx(expected, abs=1e-15)
    assert body["at_iculos"] == hour
    # cross-check against the independent raw-JSON traversal oracle
    margin = oracle_margin(raw_model, values)
    assert body["probability"] == pytest.approx(1 / (1 + math.exp(-margin)), abs=1e-12)
    assert body["alert"] == (body["probability"] > 0.5)
    assert body["replica_id"] == "t0"
    assert body["model_version"] == model.version
    assert body["server_time_ms"] >= 0
    assert resp.headers["x-replica-id"] == "t0"


def test_predict_specific_hour(client, seeded_store):
    pid = "p000001"
    hour = seeded_store.get(pid).iculos[0]
    resp = client.post("/predict", json={"patient_id": pid, "at_iculos": hour})
    assert resp.status_code == 200
    assert resp.json()["at_iculos"] == hour


def test_predict_unknown_patient_404(client):
    resp = client.post("/predict", json={"patient_id": "ghost"})
    assert resp.status_code == 404
    assert resp.json()["code"] == "patient_not_found"


def test_predict_hour_off_axis_422(client):
    resp = client.post("/predict", json={"patient_id": "p000001", "at_iculos": 9999})
    assert resp.status_code == 422
    assert resp.json()["code"] == "iculos_out_of_range"


def test_predict_malformed_body_422(client):
    resp = client.post("/predict", json={"nope": 1})
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_request"


def test_alert_strictly_above_threshold(seeded_store, model):
    result = predict_for_patient(seeded_store, model, "p000009", None, 0.5)
    # exactly at the threshold: ties do not alert
    at_tie = predict_for_patient(
        seeded_store, model, "p000009", None, result.probability
    )
    assert at_tie.alert is False
    below = predict_for_patient(
        seeded_store, model, "p000009", None, result.probability - 1e-9
    )
    assert below.alert is True


def test_alert_threshold_config_validated():
    with pytest.raises(ValueError):
        ServiceConfig(store_root="x", model_path="y", alert_threshold=1.0)
    with pytest.raises(ValueError):
        ServiceConfig(store_root="x", model_path="y", alert_threshold=0.0)


def test_batch_matches_rest_responses(client, seeded_store, model, fixture_ids):
    out = io.StringIO()
    outcome = run_batch(seeded_store, model, fixture_ids, out, alert_threshold=0.5)
    assert outcome.ok == len(fixture_ids)
    assert outcome.failed == 0
    lines = [json.loads(ln) for ln in out.getvalue().splitlines()]
    assert len(lines) == len(fixture_ids)
    for line in lines:
        rest = client.post("/predict", json={"patient_id": line["patient_id"]}).json()
        assert line["probability"] == rest["probability"]
        assert line["alert"] == rest["alert"]
        assert line["at_iculos"] == rest["at_iculos"]
        assert line["model_version"] == rest["model_version"]


def test_batch_empty_input(tmp_path, seeded_store, model):
    out_path = tmp_path / "empty.jsonl"
    outcome = run_batch(seeded_store, model, [], out_path)
    assert (outcome.ok, outcome.failed) == (0, 0)
    assert out_path.read_text() == ""


def test_batch_collects_per_patient_errors(seeded_store, model):
    out = io.StringIO()
    outcome = run_batch(seeded_store, model, ["p000001", "ghost"], out)
    assert outcome.ok == 1
    assert outcome.failed == 1
    assert "ghost" in outcome.errors


def test_prediction_result_shape():
    fields = set(PredictionResult.__dataclass_fields__)
    assert fields == {
        "patient_id", "probability", "alert", "at_iculos", "model_version",
        "server_time_ms", "replica_id",
    }
