"""Built-in load generator: closed-loop virtual users against the REST API.

Each VU loops request -> await response -> next request (one iteration per
request).  Latency is measured from request send to response complete; a
failure is a timeout, a transport error, or a non-2xx status.  Successful
responses slower than the latency threshold are additionally counted as
late, mirroring the "valid but slow under stress" distinction.
"""

from __future__ import annotations

import asyncio
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import httpx


class LoadgenError(Exception):
    pass


class EmptySamplesError(LoadgenError):
    pass


class TargetUnreachableError(LoadgenError):
    pass


@dataclass
class Thresholds:
    p95_ms: float = 500.0
    fail_rate: float = 0.01


@dataclass
class ScenarioConfig:
    target_url: str
    vus: int = 1
    duration_s: float = 10.0
    ramp_up_s: float = 0.0
    patient_id_pool: list[str] = field(default_factory=list)
    request_timeout_ms: float = 10_000.0
    thresholds: Thresholds = field(default_factory=Thresholds)
    at_iculos: Optional[int] = None
    max_iterations: Optional[int] = None  # per VU; None = run for duration_s

    def __post_init__(self) -> None:
        if self.vus < 1:
            raise ValueError("vus must be >= 1")
        if self.thresholds.p95_ms <= 0 or self.thresholds.fail_rate <= 0:
            raise ValueError("thresholds must be positive")


@dataclass
class IterationStats:
    count: int = 0
    avg_ms: float = 0.0
    max_ms: float = 0.0


@dataclass
class LoadTestReport:
    vus: int
    duration_s: float
    total_requests: int
    successes: int
    failures: int
    avg_ms: float
    p90_ms: float
    p95_ms: float
    max_ms: float
    failed_fraction: float
    late_responses: int
    bytes_sent: int
    bytes_received: int
    iterations: IterationStats
    per_replica: dict[str, int]
    failure_kinds: dict[str, int]
    threshold_verdicts: dict
    percentile_method: str = "nearest_rank"


def percentile(samples: list[float], q: float) -> float:
    """Nearest-rank percentile: element at 1-based index ceil(q * N) of the
    ascending-sorted samples."""
    if not samples:
        raise EmptySamplesError("no samples")
    if not (0.0 < q <= 1.0):
        raise ValueError("q must be in (0, 1]")
    ordered = sorted(samples)
    k = max(1, math.ceil(q * len(ordered)))
    return ordered[k - 1]


def evaluate_thresholds(
    p95_ms: float, failed_fraction: float, thresholds: Thresholds
) -> dict:
    """Success criteria, each reported separately; pass is strict `<`."""
    latency_ok = p95_ms < thresholds.p95_ms
    failures_ok = failed_fraction < thresholds.fail_rate
    return {
        "p95_ms": {"value": p95_ms, "limit": thresholds.p95_ms, "pass": latency_ok},
        "fail_rate": {
            "value": failed_fraction,
            "limit": thresholds.fail_rate,
            "pass": failures_ok,
        },
        "pass": latency_ok and failures_ok,
    }


def _request_wire_bytes(request: httpx.Request) -> int:
    line = f"{request.method} {request.url.raw_path.decode()} HTTP/1.1\r\n"
    headers = sum(len(k) + len(v) + 4 for k, v in request.headers.items())
    return len(line) + headers + 2 + len(request.content or b"")


def _response_wire_bytes(response: httpx.Response) -> int:
    line = f"HTTP/1.1 {response.status_code} {response.reason_phrase}\r\n"
    headers = sum(len(k) + len(v) + 4 for k, v in response.headers.items())
    return len(line) + headers + 2 + len(response.content)


@dataclass
class _VuBuffer:
    latencies: list[float] = field(default_factory=list)
    iteration_ms: list[float] = field(default_factory=list)
    failures: dict[str, int] = field(default_factory=dict)
    successes: int = 0
    late: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0
    per_replica: dict[str, int] = field(default_factory=dict)

    def fail(self, kind: str) -> None:
        self.failures[kind] = self.failures.get(kind, 0) + 1


async def _virtual_user(
    index: int,
    cfg: ScenarioConfig,
    client: httpx.AsyncClient,
    t_end: float,
    buffer: _VuBuffer,
) -> None:
    if cfg.ramp_up_s > 0:
        await asyncio.sleep(cfg.ramp_up_s * index / cfg.vus)
    pool = cfg.patient_id_pool
    k = index
    done = 0
    while time.perf_counter() < t_end:
        if cfg.max_iterations is not None and done >= cfg.max_iterations:
            break
        done += 1
        iter_start = time.perf_counter()
        body: dict = {"patient_id": pool[k % len(pool)]}
        if cfg.at_iculos is not None:
            body["at_iculos"] = cfg.at_iculos
        k += 1
        try:
            t0 = time.perf_counter()
            response = await client.post(f"{cfg.target_url}/predict", json=body)
            latency_ms = (time.perf_counter() - t0) * 1000.0
        except httpx.TimeoutException:
            buffer.latencies.append(cfg.request_timeout_ms)
            buffer.fail("timeout")
            buffer.iteration_ms.append((time.perf_counter() - iter_start) * 1000.0)
            continue
        except httpx.TransportError:
            buffer.latencies.append((time.perf_counter() - t0) * 1000.0)
            buffer.fail("transport_error")
            buffer.iteration_ms.append((time.perf_counter() - iter_start) * 1000.0)
            continue
        buffer.latencies.append(latency_ms)
        buffer.bytes_sent += _request_wire_bytes(response.request)
        buffer.bytes_received += _response_wire_bytes(response)
        if 200 <= response.status_code < 300:
            buffer.successes += 1
            if latency_ms > cfg.thresholds.p95_ms:
                buffer.late += 1
            replica = response.headers.get("x-replica-id", "unknown")
            buffer.per_replica[replica] = buffer.per_replica.get(replica, 0) + 1
        else:
            buffer.fail(f"http_{response.status_code}")
        buffer.iteration_ms.append((time.perf_counter() - iter_start) * 1000.0)


async def _run_async(cfg: ScenarioConfig) -> LoadTestReport:
    timeout = httpx.Timeout(cfg.request_timeout_ms / 1000.0)
    limits = httpx.Limits(
        max_connections=max(100, cfg.vus * 2),
        max_keepalive_connections=max(20, cfg.vus),
    )
    async with httpx.AsyncClient(timeout=timeout, limits=limits) as client:
        try:
            await client.get(f"{cfg.target_url}/health", timeout=5.0)
        except httpx.TransportError as exc:
            raise TargetUnreachableError(f"{cfg.target_url}: {exc}") from exc

        buffers = [_VuBuffer() for _ in range(cfg.vus)]
        t_end = time.perf_counter() + cfg.ramp_up_s + cfg.duration_s
        await asyncio.gather(
            *(
                _virtual_user(i, cfg, client, t_end, buffers[i])
                for i in range(cfg.vus)
            )
        )
    return _merge(cfg, buffers)


def _merge(cfg: ScenarioConfig, buffers: list[_VuBuffer]) -> LoadTestReport:
    latencies: list[float] = []
    iterations: list[float] = []
    per_replica: dict[str, int] = {}
    failure_kinds: dict[str, int] = {}
    successes = late = bytes_sent = bytes_received = 0
    for buf in buffers:
        latencies.extend(buf.latencies)
        iterations.extend(buf.iteration_ms)
        successes += buf.successes
        late += buf.late
        bytes_sent += buf.bytes_sent
        bytes_received += buf.bytes_received
        for k, v in buf.per_replica.items():
            per_replica[k] = per_replica.get(k, 0) + v
        for k, v in buf.failures.items():
            failure_kinds[k] = failure_kinds.get(k, 0) + v

    total = len(latencies)
    failures = sum(failure_kinds.values())
    if not latencies:
        raise LoadgenError("scenario produced no requests; duration too short?")
    p90 = percentile(latencies, 0.90)
    p95 = percentile(latencies, 0.95)
    failed_fraction = failures / total
    verdicts = evaluate_thresholds(p95, failed_fraction, cfg.thresholds)
    return LoadTestReport(
        vus=cfg.vus,
        duration_s=cfg.duration_s,
        total_requests=total,
        successes=successes,
        failures=failures,
        avg_ms=sum(latencies) / total,
        p90_ms=p90,
        p95_ms=p95,
        max_ms=max(latencies),
        failed_fraction=failed_fraction,
        late_responses=late,
        bytes_sent=bytes_sent,
        bytes_received=bytes_received,
        iterations=IterationStats(
            count=len(iterations),
            avg_ms=sum(iterations) / len(iterations) if iterations else 0.0,
            max_ms=max(iterations) if iterations else 0.0,
        ),
        per_replica=dict(sorted(per_replica.items())),
        failure_kinds=dict(sorted(failure_kinds.items())),
        threshold_verdicts=verdicts,
    )


def run_scenario(cfg: ScenarioConfig) -> LoadTestReport:
    """Drive the scenario to completion and aggregate per-VU buffers."""
    if not cfg.patient_id_pool:
        raise ValueError("patient_id_pool must not be empty")
    return asyncio.run(_run_async(cfg))
