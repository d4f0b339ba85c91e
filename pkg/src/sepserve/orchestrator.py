"""Replica pool supervisor and stable front endpoint.

Maintains a desired number of prediction-service worker processes on one
host, dispatches requests across them (round robin or least outstanding),
probes health, restarts failed replicas with capped exponential backoff,
and drains in-flight work before stopping a replica on scale-down.

Replica processes share nothing but the read-only model file and the store
root, so CPU oversubscription behaves like it would for isolated pods.
"""

from __future__ import annotations

import logging
import os
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import httpx
import uvicorn
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

logger = logging.getLogger(__name__)

_HOP_BY_HOP = {
    "connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
    "te", "trailers", "transfer-encoding", "upgrade", "content-length",
}
_MAX_RESTART_DELAY_MS = 10_000.0


class OrchestratorError(Exception):
    pass


class SpawnFailureError(OrchestratorError):
    pass


@dataclass
class ScalingConfig:
    store_root: str
    model_path: str
    replicas: int = 1
    detected_threads: Optional[int] = None  # override; None -> probe the host
    dispatch_policy: str = "round_robin"  # or "least_outstanding"
    health_interval_ms: float = 1000.0
    restart_backoff_ms: float = 1000.0
    unhealthy_after: int = 3  # consecutive probe failures before restart
    front_host: str = "127.0.0.1"
    front_port: int = 0
    drain_timeout_s: float = 10.0
    spawn_timeout_s: float = 60.0  # many replicas booting share one host CPU
    dispatch_timeout_s: float = 60.0
    alert_threshold: float = 0.5
    extra_latency_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.detected_threads is not None and self.detected_threads < 1:
            raise ValueError("detected_threads must be >= 1")
        if self.dispatch_policy not in ("round_robin", "least_outstanding"):
            raise ValueError(f"unknown dispatch policy {self.dispatch_policy!r}")


def detect_threads(config: Optional[ScalingConfig] = None) -> int:
    """Hardware thread count used to recommend the replica count."""
    if config is not None and config.detected_threads is not None:
        return config.detected_threads
    return os.cpu_count() or 1


@dataclass
class ReplicaState:
    replica_id: str
    status: str  # starting | healthy | unhealthy | restarting
    served_count: int
    outstanding: int
    port: Optional[int]
    pid: Optional[int]
    restarts: int
    last_health_at: Optional[float]
    draining: bool


class _Replica:
    """One supervised worker process."""

    def __init__(self, replica_id: str, cfg: ScalingConfig, ready_dir: Path):
        self.replica_id = replica_id
        self.cfg = cfg
        self.ready_file = ready_dir / f"{replica_id}.ready.json"
        self.proc: Optional[subprocess.Popen] = None
        self.port: Optional[int] = None
        self.status = "starting"
        self.served_count = 0
        self.outstanding = 0
        self.consecutive_failures = 0
        self.restarts = 0
        self.last_health_at: Optional[float] = None
        self.draining = False
        self.drain_started: Optional[float] = None
        self.spawned_at: Optional[float] = None
        self.restart_due: float = 0.0  # monotonic time

    def spawn(self) -> None:
        if self.ready_file.exists():
            self.ready_file.unlink()
        cmd = [
            sys.executable, "-m", "sepserve.service",
            "--store-root", self.cfg.store_root,
            "--model", self.cfg.model_path,
            "--host", "127.0.0.1",
            "--port", "0",
            "--replica-id", self.replica_id,
            "--alert-threshold", str(self.cfg.alert_threshold),
            "--extra-latency-ms", str(self.cfg.extra_latency_ms),
            "--ready-file", str(self.ready_file),
        ]
        try:
            self.proc = subprocess.Popen(
                cmd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
            )
        except OSError as exc:
            raise SpawnFailureError(f"{self.replica_id}: {exc}") from exc
        self.port = None
        self.spawned_at = time.monotonic()
        self.consecutive_failures = 0
        logger.info("spawned replica %s pid=%s", self.replica_id, self.proc.pid)

    def poll_ready(self) -> bool:
        if self.port is not None:
            return True
        if self.ready_file.exists():
            import json

            try:
                info = json.loads(self.ready_file.read_text())
            except ValueError:
                return False
            self.port = int(info["port"])
            return True
        return False

    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    def terminate(self, grace_s: float = 5.0) -> None:
        if self.proc is None:
            return
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=grace_s)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def snapshot(self) -> ReplicaState:
        return ReplicaState(
            replica_id=self.replica_id,
            status=self.status,
            served_count=self.served_count,
            outstanding=self.outstanding,
            port=self.port,
            pid=self.proc.pid if self.proc else None,
            restarts=self.restarts,
            last_health_at=self.last_health_at,
            draining=self.draining,
        )


class _ScaleRequest(BaseModel):
    replicas: int


class Orchestrator:
    """Supervises the replica pool and serves the stable front endpoint."""

    def __init__(self, config: ScalingConfig):
        self.config = config
        self._desired = config.replicas
        self._replicas: dict[str, _Replica] = {}
        self._roster_lock = threading.Lock()
        self._next_replica_no = 0
        self._rr_counter = 0
        self.total_served = 0
        self.front_failures = 0
        self._stop = threading.Event()
        self._control_thread: Optional[threading.Thread] = None
        self._front_server: Optional[uvicorn.Server] = None
        self._front_thread: Optional[threading.Thread] = None
        self._ready_dir = tempfile.TemporaryDirectory(prefix="sepserve-orc-")
        self._probe = httpx.Client(timeout=2.0)
        self._client: Optional[httpx.AsyncClient] = None
        self.front_port: Optional[int] = None

    # ---- lifecycle -------------------------------------------------------

    def start(self, wait_healthy: bool = True, timeout_s: float = 60.0) -> None:
        self._start_front()
        with self._roster_lock:
            for _ in range(self._desired):
                self._add_replica_locked()
        self._control_thread = threading.Thread(
            target=self._control_loop, name="orchestrator-control", daemon=True
        )
        self._control_thread.start()
        if wait_healthy:
            self.wait_converged(timeout_s=timeout_s)

    def shutdown(self, drain: bool = True) -> None:
        self._stop.set()
        if self._control_thread is not None:
            self._control_thread.join(timeout=10)
        with self._roster_lock:
            replicas = list(self._replicas.values())
        if drain:
            deadline = time.monotonic() + self.config.drain_timeout_s
            while time.monotonic() < deadline and any(
                r.outstanding > 0 for r in replicas
            ):
                time.sleep(0.02)
        for replica in replicas:
            replica.terminate()
        if self._front_server is not None:
            self._front_server.should_exit = True
        if self._front_thread is not None:
            self._front_thread.join(timeout=10)
        self._probe.close()
        self._ready_dir.cleanup()

    def wait_converged(self, timeout_s: float = 60.0) -> None:
        """Block until exactly `desired` replicas are healthy and every
        drained replica is fully stopped."""
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            with self._roster_lock:
                roster_size = len(self._replicas)
            if roster_size == self._desired and self.healthy_count() == self._desired:
                return
            time.sleep(0.05)
        raise TimeoutError(
            f"pool did not converge to {self._desired} healthy replicas within "
            f"{timeout_s}s (healthy={self.healthy_count()})"
        )

    # ---- pool management -------------------------------------------------

    def _add_replica_locked(self) -> _Replica:
        replica_id = f"r{self._next_replica_no}"
        self._next_replica_no += 1
        replica = _Replica(replica_id, self.config, Path(self._ready_dir.name))
        replica.spawn()
        self._replicas[replica_id] = replica
        return replica

    def scale_to(self, n: int) -> None:
        """Set the desired replica count; the control loop converges to it.

        Scale-down drains in-flight requests before stopping a replica.
        """
        if n < 1:
            raise ValueError("replica count must be >= 1")
        self._desired = n

    def healthy_count(self) -> int:
        with self._roster_lock:
            return sum(
                1
                for r in self._replicas.values()
                if r.status == "healthy" and not r.draining
            )

    def active_count(self) -> int:
        with self._roster_lock:
            return sum(1 for r in self._replicas.values() if not r.draining)

    def replica_stats(self) -> list[ReplicaState]:
        with self._roster_lock:
            return [
                self._replicas[k].snapshot() for k in sorted(self._replicas)
            ]

    def status(self) -> dict:
        threads = detect_threads(self.config)
        return {
            "desired": self._desired,
            "healthy": self.healthy_count(),
            "detected_threads": threads,
            "recommended_replicas": threads,
            "dispatch_policy": self.config.dispatch_policy,
            "total_served": self.total_served,
            "front_failures": self.front_failures,
            "replicas": [vars(s) for s in self.replica_stats()],
        }

    def _control_loop(self) -> None:
        # Ticks fast for drain/restart responsiveness; health probes honor
        # health_interval_ms per replica.
        tick_s = min(0.1, self.config.health_interval_ms / 1000.0)
        last_probe: dict[str, float] = {}
        while not self._stop.is_set():
            now = time.monotonic()
            with self._roster_lock:
                replicas = list(self._replicas.values())
                active = [r for r in replicas if not r.draining]
                # converge up
                while len(active) < self._desired:
                    active.append(self._add_replica_locked())
                # converge down: newest first
                excess = len(active) - self._desired
                if excess > 0:
                    newest = sorted(active, key=lambda r: int(r.replica_id[1:]))
                    for replica in newest[-excess:]:
                        replica.draining = True
                        replica.drain_started = now
            for replica in replicas:
                try:
                    self._tend(replica, now, last_probe)
                except Exception:
                    logger.exception("control loop error for %s", replica.replica_id)
            self._stop.wait(tick_s)

    def _tend(self, replica: _Replica, now: float, last_probe: dict[str, float]) -> None:
        if replica.draining:
            expired = (
                replica.drain_started is not None
                and now - replica.drain_started > self.config.drain_timeout_s
            )
            if replica.outstanding == 0 or expired:
                replica.terminate()
                with self._roster_lock:
                    self._replicas.pop(replica.replica_id, None)
            return

        if not replica.alive():
            if replica.status != "restarting":
                logger.warning("replica %s exited; scheduling restart", replica.replica_id)
                replica.status = "restarting"
                replica.port = None
                delay_ms = (
                    0.0
                    if replica.restarts == 0
                    else min(
                        self.config.restart_backoff_ms * (2 ** (replica.restarts - 1)),
                        _MAX_RESTART_DELAY_MS,
                    )
                )
                replica.restarts += 1
                replica.restart_due = now + delay_ms / 1000.0
            if now >= replica.restart_due:
                replica.spawn()
            return

        if replica.status in ("starting", "restarting"):
            if not replica.poll_ready():
                if (
                    replica.spawned_at is not None
                    and now - replica.spawned_at > self.config.spawn_timeout_s
                ):
                    logger.warning(
                        "replica %s failed to become ready; respawning", replica.replica_id
                    )
                    replica.terminate()
                return
            if self._probe_health(replica):
                replica.status = "healthy"
                replica.consecutive_failures = 0
                replica.last_health_at = now
            return

        # healthy replica: periodic probe
        if now - last_probe.get(replica.replica_id, 0.0) < (
            self.config.health_interval_ms / 1000.0
        ):
            return
        last_probe[replica.replica_id] = now
        if self._probe_health(replica):
            replica.consecutive_failures = 0
            replica.last_health_at = now
        else:
            replica.consecutive_failures += 1
            if replica.consecutive_failures >= self.config.unhealthy_after:
                logger.warning(
                    "replica %s unhealthy after %d probes; restarting",
                    replica.replica_id, replica.consecutive_failures,
                )
                replica.status = "unhealthy"
                replica.terminate()

    def _probe_health(self, replica: _Replica) -> bool:
        if replica.port is None:
            return False
        try:
            resp = self._probe.get(f"http://127.0.0.1:{replica.port}/health")
        except httpx.HTTPError:
            return False
        return resp.status_code == 200

    # ---- dispatch --------------------------------------------------------

    def _eligible(self) -> list[_Replica]:
        with self._roster_lock:
            return sorted(
                (
                    r
                    for r in self._replicas.values()
                    if r.status == "healthy" and not r.draining and r.port is not None
                ),
                key=lambda r: r.replica_id,
            )

    def _pick(self, pool: list[_Replica]) -> _Replica:
        if self.config.dispatch_policy == "least_outstanding":
            return min(pool, key=lambda r: (r.outstanding, r.replica_id))
        chosen = pool[self._rr_counter % len(pool)]
        self._rr_counter += 1
        return chosen

    def build_front_app(self) -> FastAPI:
        from contextlib import asynccontextmanager

        @asynccontextmanager
        async def lifespan(_app: FastAPI):
            self._client = httpx.AsyncClient(
                timeout=self.config.dispatch_timeout_s,
                limits=httpx.Limits(max_connections=2000, max_keepalive_connections=200),
            )
            try:
                yield
            finally:
                await self._client.aclose()

        app = FastAPI(title="sepserve front endpoint", lifespan=lifespan)
        # admin routes and the no-replica 503 path answer from the front
        # itself; replica responses already carry CORS headers
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
            expose_headers=["x-replica-id"],
        )

        @app.get("/admin/status")
        async def admin_status() -> JSONResponse:
            return JSONResponse(self.status())

        @app.post("/admin/scale")
        async def admin_scale(body: _ScaleRequest) -> JSONResponse:
            try:
                self.scale_to(body.replicas)
            except ValueError as exc:
                return JSONResponse(
                    status_code=422, content={"code": "invalid_scale", "detail": str(exc)}
                )
            return JSONResponse({"desired": self._desired})

        @app.api_route(
            "/{path:path}",
            methods=["GET", "POST", "PUT", "DELETE", "PATCH", "HEAD", "OPTIONS"],
        )
        async def proxy(request: Request, path: str) -> Response:
            body = await request.body()
            attempts = max(1, len(self._eligible()))
            for _ in range(attempts):
                pool = self._eligible()
                if not pool:
                    break
                replica = self._pick(pool)
                replica.outstanding += 1
                t0 = time.perf_counter()
                try:
                    upstream = await self._client.request(
                        request.method,
                        f"http://127.0.0.1:{replica.port}/{path}",
                        params=request.url.query,
                        content=body,
                        headers={
                            k: v
                            for k, v in request.headers.items()
                            if k.lower() not in ("host", *_HOP_BY_HOP)
                        },
                    )
                except httpx.TransportError:
                    # likely a dying replica; hint the control loop and retry
                    replica.consecutive_failures += 1
                    continue
                finally:
                    replica.outstanding -= 1
                replica.served_count += 1
                self.total_served += 1
                logger.info(
                    "dispatch replica=%s method=%s path=/%s status=%d latency_ms=%.2f",
                    replica.replica_id, request.method, path,
                    upstream.status_code, (time.perf_counter() - t0) * 1000.0,
                )
                # the front's own CORS middleware supplies access-control
                # headers; forwarding the replica's too would duplicate them
                headers = {
                    k: v
                    for k, v in upstream.headers.items()
                    if k.lower() not in _HOP_BY_HOP
                    and not k.lower().startswith("access-control-")
                }
                return Response(
                    content=upstream.content,
                    status_code=upstream.status_code,
                    headers=headers,
                )
            self.front_failures += 1
            return JSONResponse(
                status_code=503,
                content={"code": "no_healthy_replica", "detail": "no replica available"},
            )

        return app

    def _start_front(self) -> None:
        server = uvicorn.Server(
            uvicorn.Config(
                self.build_front_app(),
                host=self.config.front_host,
                port=self.config.front_port,
                log_level="warning",
            )
        )
        self._front_server = server
        self._front_thread = threading.Thread(
            target=server.run, name="orchestrator-front", daemon=True
        )
        self._front_thread.start()
        deadline = time.monotonic() + 30
        while not server.started:
            if time.monotonic() > deadline:
                raise OrchestratorError("front endpoint failed to start")
            time.sleep(0.01)
        self.front_port = server.servers[0].sockets[0].getsockname()[1]

    @property
    def front_url(self) -> str:
        return f"http://{self.config.front_host}:{self.front_port}"


def run_until_signalled(
    orchestrator: Orchestrator, on_ready: Optional[Callable[[], None]] = None
) -> int:
    """Foreground runner for `serve`: blocks until SIGINT/SIGTERM, then drains."""
    import signal

    stop = threading.Event()

    def _handle(signum, _frame):
        logger.info("signal %s received; draining", signum)
        stop.set()

    signal.signal(signal.SIGINT, _handle)
    signal.signal(signal.SIGTERM, _handle)
    orchestrator.start(wait_healthy=True)
    if on_ready is not None:
        on_ready()
    stop.wait()
    orchestrator.shutdown(drain=True)
    return 0
