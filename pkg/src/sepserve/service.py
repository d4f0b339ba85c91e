"""REST prediction service: the unit the orchestrator replicates.

Routes:
    GET  /health            -> {status, replica_id, model_version}
    GET  /patients          -> {"patients": [...]}
    GET  /patients/{id}     -> stored document, byte-for-byte
    POST /predict           -> PredictionResult JSON, body {"patient_id", "at_iculos"?}

Every error body carries a machine-readable code: {"code": ..., "detail": ...}.
The same prediction path is exposed as a batch CLI (see sepserve.cli) so the
service can be validated without the full platform running.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, TextIO, Union

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from sepserve import __version__
from sepserve.gbdt import (
    IculosOutOfRangeError,
    TreeEnsembleModel,
    extract_features,
    load_model,
    predict_probability,
)
from sepserve.store import DocumentStore, NotFoundError

logger = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    store_root: str
    model_path: str
    host: str = "127.0.0.1"
    port: int = 0
    alert_threshold: float = 0.5
    replica_id: str = "r0"
    # Synthetic per-request service latency; used by drain tests and load
    # shaping experiments. 0 disables it.
    extra_latency_ms: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alert_threshold < 1.0):
            raise ValueError("alert_threshold must be in the open interval (0, 1)")


@dataclass
class PredictionResult:
    patient_id: str
    probability: float
    alert: bool
    at_iculos: int
    model_version: str
    server_time_ms: float
    replica_id: str


class PredictRequest(BaseModel):
    patient_id: str
    at_iculos: Optional[int] = None


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(detail)


def predict_for_patient(
    store: DocumentStore,
    model: TreeEnsembleModel,
    patient_id: str,
    at_iculos: Optional[int],
    alert_threshold: float,
    replica_id: str = "cli",
) -> PredictionResult:
    """Shared REST/CLI prediction path: fetch, featurize, score, flag."""
    t0 = time.perf_counter()
    doc = store.get(patient_id)
    hour = doc.iculos[-1] if at_iculos is None else at_iculos
    values = extract_features(doc, hour, model.feature_names)
    probability = predict_probability(model, values)
    return PredictionResult(
        patient_id=patient_id,
        probability=probability,
        alert=probability > alert_threshold,  # strict: ties do not alert
        at_iculos=hour,
        model_version=model.version,
        server_time_ms=(time.perf_counter() - t0) * 1000.0,
        replica_id=replica_id,
    )


def create_app(config: ServiceConfig, preload: bool = True) -> FastAPI:
    app = FastAPI(title="sepserve prediction service", version=__version__)
    # the dashboard is served as static assets from another origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["x-replica-id"],
    )
    state: dict[str, Optional[object]] = {"store": None, "model": None}

    def load() -> None:
        state["model"] = load_model(config.model_path)
        state["store"] = DocumentStore(config.store_root)

    if preload:
        load()
    app.state.load = load  # lifecycle tests trigger late loading through this
    app.state.config = config

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "detail": exc.detail}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(
        _req: Request, exc: RequestValidationError
    ) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"code": "invalid_request", "detail": str(exc)}
        )

    @app.exception_handler(Exception)
    async def _internal_error(_req: Request, exc: Exception) -> JSONResponse:
        logger.exception("unhandled error: %s", exc)
        return JSONResponse(
            status_code=500, content={"code": "internal_error", "detail": str(exc)}
        )

    @app.middleware("http")
    async def _observe(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        latency_ms = (time.perf_counter() - t0) * 1000.0
        response.headers["x-replica-id"] = config.replica_id
        logger.info(
            "replica=%s method=%s path=%s status=%d latency_ms=%.2f",
            config.replica_id, request.method, request.url.path,
            response.status_code, latency_ms,
        )
        return response

    def _ready() -> bool:
        return state["model"] is not None and state["store"] is not None

    @app.get("/health")
    async def health() -> Response:
        if not _ready():
            return JSONResponse(
                status_code=503,
                content={"code": "not_ready", "detail": "model or store not loaded"},
            )
        model: TreeEnsembleModel = state["model"]  # type: ignore[assignment]
        return JSONResponse(
            {"status": "ok", "replica_id": config.replica_id,
             "model_version": model.version}
        )

    def _require_ready() -> tuple[DocumentStore, TreeEnsembleModel]:
        if not _ready():
            raise ApiError(503, "not_ready", "model or store not loaded")
        return state["store"], state["model"]  # type: ignore[return-value]

    @app.get("/patients")
    async def patients() -> JSONResponse:
        store, _ = _require_ready()
        return JSONResponse({"patients": store.list_patients()})

    @app.get("/patients/{patient_id}")
    async def patient(patient_id: str) -> Response:
        store, _ = _require_ready()
        try:
            raw = store.get_raw(patient_id)
        except NotFoundError:
            raise ApiError(404, "patient_not_found", f"unknown patient {patient_id!r}")
        return Response(content=raw, media_type="application/json")

    @app.post("/predict")
    async def predict(body: PredictRequest) -> JSONResponse:
        store, model = _require_ready()
        if config.extra_latency_ms > 0:
            time.sleep(config.extra_latency_ms / 1000.0)
        try:
            result = predict_for_patient(
                store, model, body.patient_id, body.at_iculos,
                config.alert_threshold, config.replica_id,
            )
        except NotFoundError:
            raise ApiError(
                404, "patient_not_found", f"unknown patient {body.patient_id!r}"
            )
        except IculosOutOfRangeError as exc:
            raise ApiError(422, "iculos_out_of_range", str(exc))
        return JSONResponse(asdict(result))

    return app


@dataclass
class BatchOutcome:
    ok: int
    failed: int
    errors: dict[str, str]


def run_batch(
    store: DocumentStore,
    model: TreeEnsembleModel,
    patient_ids: list[str],
    out: Union[str, Path, TextIO],
    alert_threshold: float = 0.5,
) -> BatchOutcome:
    """Batch inference: one PredictionResult JSON line per patient.

    Same code path as the REST handler, so probabilities are identical for
    identical patient/hour. Errors are collected per patient, not fatal.
    """
    ok, errors = 0, {}
    close = False
    if isinstance(out, (str, Path)):
        fh = open(out, "w", encoding="utf-8")
        close = True
    else:
        fh = out
    try:
        for pid in patient_ids:
            try:
                result = predict_for_patient(
                    store, model, pid, None, alert_threshold, replica_id="cli"
                )
            except Exception as exc:  # per-patient isolation
                errors[pid] = f"{type(exc).__name__}: {exc}"
                continue
            fh.write(json.dumps(asdict(result), sort_keys=True) + "\n")
            ok += 1
    finally:
        if close:
            fh.close()
    return BatchOutcome(ok=ok, failed=len(errors), errors=errors)


def _write_ready_file(server, path: str) -> None:
    # Replica processes bind port 0; the supervisor learns the real port here.
    while not server.started:
        if getattr(server, "should_exit", False):
            return
        time.sleep(0.01)
    sock = server.servers[0].sockets[0]
    host, port = sock.getsockname()[:2]
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump({"host": host, "port": port, "pid": os.getpid()}, fh)
    os.replace(tmp, path)


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point for one replica process (spawned by the orchestrator)."""
    import uvicorn

    parser = argparse.ArgumentParser(prog="sepserve-replica")
    parser.add_argument("--store-root", required=True)
    parser.add_argument("--model", required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--replica-id", default="r0")
    parser.add_argument("--alert-threshold", type=float, default=0.5)
    parser.add_argument("--extra-latency-ms", type=float, default=0.0)
    parser.add_argument("--ready-file", default=None)
    parser.add_argument("--log-level", default="warning")
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.log_level.upper())
    config = ServiceConfig(
        store_root=args.store_root,
        model_path=args.model,
        host=args.host,
        port=args.port,
        alert_threshold=args.alert_threshold,
        replica_id=args.replica_id,
        extra_latency_ms=args.extra_latency_ms,
    )
    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host=args.host, port=args.port, log_level=args.log_level)
    )
    if args.ready_file:
        threading.Thread(
            target=_write_ready_file, args=(server, args.ready_file), daemon=True
        ).start()
    server.run()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
