"""Deterministic discrete-event queueing simulator for the replica pool.

Model: R single-threaded replicas on a host with T hardware threads share a
central FIFO dispatch queue.  At most min(R, T) jobs execute concurrently;
when R exceeds T (more runnable worker processes than threads), each job's
service time is inflated by the factor

    1 + oversub_penalty * max(0, R - T) / T

plus context_switch_ms per scheduling quantum, a two-knob stand-in for
scheduler contention.  The inflation is fixed at service start; jobs are
short relative to changes in contention, so mid-job re-rating is not
modeled.  Everything is driven by seeded RNG streams, so a (config, seed)
pair reproduces byte-identical reports on any host.

Workloads are closed-loop (VUs with think time, the default, matching the
load generator) or open-loop Poisson arrivals (for queueing-theory checks).
Service draws are attached to jobs in creation order, which gives common
random numbers across configurations that share a seed.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from sepserve.loadgen import IterationStats, Thresholds, evaluate_thresholds, percentile

_ISSUE, _ARRIVE, _DEPART, _TIMEOUT = 0, 1, 2, 3


class InvalidConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    replicas: int = 3
    threads: int = 12
    # exactly one of: closed-loop VUs, or open-loop Poisson arrivals
    vus: Optional[int] = 1000
    arrival_rate_per_s: Optional[float] = None
    think_time_ms: float = 0.0
    service_time_base_ms: float = 17.0
    service_dist: str = "exponential"  # or "constant"
    oversub_penalty: float = 0.12
    context_switch_ms: float = 0.05
    quantum_ms: float = 10.0
    sim_duration_s: Optional[float] = 30.0
    max_requests: Optional[int] = None
    timeout_ms: Optional[float] = 10_000.0
    seed: int = 0
    thresholds: Thresholds = field(default_factory=Thresholds)

    def validate(self) -> None:
        if self.replicas < 1 or self.threads < 1:
            raise InvalidConfigError("replicas and threads must be >= 1")
        if (self.vus is None) == (self.arrival_rate_per_s is None):
            raise InvalidConfigError(
                "exactly one of vus (closed loop) or arrival_rate_per_s "
                "(open loop) must be set"
            )
        if self.vus is not None and self.vus < 1:
            raise InvalidConfigError("vus must be >= 1")
        if self.arrival_rate_per_s is not None and self.arrival_rate_per_s <= 0:
            raise InvalidConfigError("arrival_rate_per_s must be positive")
        if self.sim_duration_s is None and self.max_requests is None:
            raise InvalidConfigError("need sim_duration_s or max_requests")
        for name in (
            "think_time_ms", "service_time_base_ms", "context_switch_ms", "quantum_ms"
        ):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be >= 0")
        if self.oversub_penalty < 0:
            raise InvalidConfigError("oversub_penalty must be >= 0")
        if self.service_dist not in ("constant", "exponential"):
            raise InvalidConfigError(f"unknown service_dist {self.service_dist!r}")


@dataclass
class SimReport:
    replicas: int
    threads: int
    seed: int
    vus: Optional[int]
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
    effective_service_time_ms: float
    utilization: float
    throughput_rps: float
    queue_len_mean: float
    queue_len_max: int
    in_system_mean: float
    mean_sojourn_ms: float
    wasted_completions: int
    in_flight_at_end: int
    percentile_method: str = "nearest_rank"


class _Job:
    __slots__ = (
        "arrival", "deadline", "base_ms", "vu", "state", "start", "replica"
    )
    QUEUED, IN_SERVICE, DONE, TIMED_OUT_QUEUED, TIMED_OUT_IN_SERVICE = range(5)

    def __init__(self, arrival: float, deadline: Optional[float], base_ms: float,
                 vu: Optional[int]):
        self.arrival = arrival
        self.deadline = deadline
        self.base_ms = base_ms
        self.vu = vu
        self.state = _Job.QUEUED
        self.start = 0.0
        self.replica = -1


def _effective_service_ms(cfg: SimConfig, base_ms: float) -> float:
    excess = max(0, cfg.replicas - cfg.threads)
    if excess == 0:
        return base_ms
    eff = base_ms * (1.0 + cfg.oversub_penalty * excess / cfg.threads)
    if cfg.context_switch_ms > 0 and cfg.quantum_ms > 0:
        eff += math.ceil(eff / cfg.quantum_ms) * cfg.context_switch_ms
    return eff


def simulate(cfg: SimConfig) -> SimReport:
    """Run one scenario to completion; fully deterministic given cfg.seed."""
    cfg.validate()
    arrival_rng = random.Random(f"{cfg.seed}/arrivals")
    service_rng = random.Random(f"{cfg.seed}/service")

    def draw_service() -> float:
        if cfg.service_dist == "constant":
            return cfg.service_time_base_ms
        return service_rng.expovariate(1.0 / cfg.service_time_base_ms)

    horizon = None if cfg.sim_duration_s is None else cfg.sim_duration_s * 1000.0
    slots = min(cfg.replicas, cfg.threads)  # concurrent execution capacity
    idle: list[int] = list(range(slots))
    heapq.heapify(idle)
    heap: list[tuple[float, int, int, object]] = []
    seq = 0

    def push(t: float, kind: int, payload: object) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, payload))
        seq += 1

    queue: list[_Job] = []
    q_head = 0  # index-based FIFO; popped entries stay for O(1) amortized
    arrivals = 0
    successes = failures = wasted = 0
    latencies: list[float] = []
    success_latencies_sum = 0.0
    effective_sum = 0.0
    effective_n = 0
    busy_ms = 0.0
    in_service: dict[_Job, None] = {}  # insertion-ordered set
    per_replica = {f"r{i}": 0 for i in range(cfg.replicas)}
    rr = 0

    last_t = 0.0
    n_unresolved = 0
    n_waiting = 0
    area_in_system = 0.0
    area_queue = 0.0
    queue_len_max = 0

    def advance(t: float) -> None:
        nonlocal last_t, area_in_system, area_queue
        dt = t - last_t
        if dt > 0:
            area_in_system += n_unresolved * dt
            area_queue += n_waiting * dt
            last_t = t

    def admit(t: float, vu: Optional[int]) -> None:
        nonlocal arrivals, n_unresolved, n_waiting, queue_len_max
        arrivals += 1
        deadline = None if cfg.timeout_ms is None else t + cfg.timeout_ms
        job = _Job(t, deadline, draw_service(), vu)
        queue.append(job)
        n_unresolved += 1
        n_waiting += 1
        queue_len_max = max(queue_len_max, n_waiting)
        if deadline is not None:
            push(deadline, _TIMEOUT, job)
        start_jobs(t)

    def start_jobs(t: float) -> None:
        nonlocal q_head, n_waiting, effective_sum, effective_n, rr
        while idle and q_head < len(queue):
            job = queue[q_head]
            q_head += 1
            if job.state == _Job.TIMED_OUT_QUEUED:
                continue  # client already gave up
            slot = heapq.heappop(idle)
            eff = _effective_service_ms(cfg, job.base_ms)
            job.state = _Job.IN_SERVICE
            job.start = t
            job.replica = rr % cfg.replicas
            rr += 1
            n_waiting -= 1
            in_service[job] = None
            effective_sum += eff
            effective_n += 1
            push(t + eff, _DEPART, (job, slot))
        if q_head > 4096 and q_head * 2 > len(queue):
            del queue[:q_head]
            q_head = 0

    def resolve_success(t: float, job: _Job) -> None:
        nonlocal successes, n_unresolved, success_latencies_sum
        latency = t - job.arrival
        latencies.append(latency)
        success_latencies_sum += latency
        successes += 1
        n_unresolved -= 1
        if job.vu is not None and not issue_stopped(t):
            push(t + cfg.think_time_ms, _ISSUE, job.vu)

    def issue_stopped(t: float) -> bool:
        if cfg.max_requests is not None and arrivals >= cfg.max_requests:
            return True
        if horizon is not None and t >= horizon:
            return True
        return False

    # seed the workload
    if cfg.vus is not None:
        for vu in range(cfg.vus):
            push(0.0, _ISSUE, vu)
    else:
        rate_per_ms = cfg.arrival_rate_per_s / 1000.0
        push(arrival_rng.expovariate(rate_per_ms), _ARRIVE, None)

    end_t = 0.0
    while heap:
        t, _, kind, payload = heapq.heappop(heap)
        if horizon is not None and t > horizon:
            advance(horizon)
            end_t = horizon
            break
        advance(t)
        end_t = t
        if kind == _ISSUE:
            if not issue_stopped(t):
                admit(t, payload)  # type: ignore[arg-type]
        elif kind == _ARRIVE:
            if not issue_stopped(t):
                admit(t, None)
                rate_per_ms = cfg.arrival_rate_per_s / 1000.0  # type: ignore[operator]
                push(t + arrival_rng.expovariate(rate_per_ms), _ARRIVE, None)
        elif kind == _DEPART:
            job, slot = payload  # type: ignore[misc]
            heapq.heappush(idle, slot)
            in_service.pop(job, None)
            busy_ms += t - job.start
            if job.state == _Job.IN_SERVICE:
                job.state = _Job.DONE
                per_replica[f"r{job.replica}"] += 1
                resolve_success(t, job)
            else:
                wasted += 1  # client timed out mid-service; work discarded
            start_jobs(t)
        elif kind == _TIMEOUT:
            job = payload  # type: ignore[assignment]
            if job.state == _Job.QUEUED:
                job.state = _Job.TIMED_OUT_QUEUED
                n_waiting -= 1
            elif job.state == _Job.IN_SERVICE:
                job.state = _Job.TIMED_OUT_IN_SERVICE
            else:
                continue  # already resolved
            latencies.append(cfg.timeout_ms)  # type: ignore[arg-type]
            failures += 1
            n_unresolved -= 1
            if job.vu is not None and not issue_stopped(t):
                push(t + cfg.think_time_ms, _ISSUE, job.vu)

    # partial busy time of jobs still on a slot at the end
    for job in in_service:
        busy_ms += max(0.0, end_t - job.start)

    resolved = successes + failures
    duration_s = end_t / 1000.0
    if not latencies:
        raise InvalidConfigError("simulation produced no completed requests")
    p90 = percentile(latencies, 0.90)
    p95 = percentile(latencies, 0.95)
    failed_fraction = failures / len(latencies)
    mean_sojourn = success_latencies_sum / successes if successes else 0.0
    late = sum(1 for v in latencies if v > cfg.thresholds.p95_ms)
    return SimReport(
        replicas=cfg.replicas,
        threads=cfg.threads,
        seed=cfg.seed,
        vus=cfg.vus,
        duration_s=duration_s,
        total_requests=arrivals,
        successes=successes,
        failures=failures,
        avg_ms=sum(latencies) / len(latencies),
        p90_ms=p90,
        p95_ms=p95,
        max_ms=max(latencies),
        failed_fraction=failed_fraction,
        late_responses=late,
        bytes_sent=0,
        bytes_received=0,
        iterations=IterationStats(
            count=resolved,
            avg_ms=(sum(latencies) / len(latencies)) + cfg.think_time_ms,
            max_ms=max(latencies) + cfg.think_time_ms,
        ),
        per_replica=per_replica,
        failure_kinds={"timeout": failures} if failures else {},
        threshold_verdicts=evaluate_thresholds(p95, failed_fraction, cfg.thresholds),
        effective_service_time_ms=effective_sum / effective_n if effective_n else 0.0,
        utilization=busy_ms / (slots * end_t) if end_t > 0 else 0.0,
        throughput_rps=successes / duration_s if duration_s > 0 else 0.0,
        queue_len_mean=area_queue / end_t if end_t > 0 else 0.0,
        queue_len_max=queue_len_max,
        in_system_mean=area_in_system / end_t if end_t > 0 else 0.0,
        mean_sojourn_ms=mean_sojourn,
        wasted_completions=wasted,
        in_flight_at_end=arrivals - resolved,
    )


def sweep_replicas(cfg: SimConfig, replica_list: list[int]) -> list[SimReport]:
    """One report per replica count, all from the same seed base."""
    return [
        simulate(dataclasses.replace(cfg, replicas=r)) for r in replica_list
    ]


@dataclass
class CalibrationResult:
    config: SimConfig
    residuals: dict[int, float]  # per-R relative p95 error at the optimum
    rms_relative_error: float
    underdetermined: bool


def calibrate(
    targets: dict[int, float],
    base: Optional[SimConfig] = None,
    service_grid_ms: Optional[list[float]] = None,
    penalty_grid: Optional[list[float]] = None,
) -> CalibrationResult:
    """Grid-fit service_time_base_ms and oversub_penalty to observed p95s.

    `targets` maps replica count to the measured p95 in ms.  With a single
    target point the two knobs are underdetermined; the flag says so and the
    fit is best-effort.  Residuals are reported so no accuracy is implied.
    """
    if not targets:
        raise InvalidConfigError("calibrate needs at least one target point")
    base = base or SimConfig()
    service_grid_ms = service_grid_ms or [4.0, 8.0, 12.0, 17.0, 24.0, 32.0]
    penalty_grid = penalty_grid or [0.0, 0.06, 0.12, 0.25, 0.5, 1.0]

    best: Optional[tuple[float, SimConfig, dict[int, float]]] = None
    for base_ms in service_grid_ms:
        for penalty in penalty_grid:
            candidate = dataclasses.replace(
                base, service_time_base_ms=base_ms, oversub_penalty=penalty
            )
            residuals: dict[int, float] = {}
            score = 0.0
            for r, target_p95 in sorted(targets.items()):
                rep = simulate(dataclasses.replace(candidate, replicas=r))
                rel = (rep.p95_ms - target_p95) / target_p95
                residuals[r] = rel
                score += rel * rel
            if best is None or score < best[0]:
                best = (score, candidate, residuals)

    score, config, residuals = best  # type: ignore[misc]
    return CalibrationResult(
        config=config,
        residuals=residuals,
        rms_relative_error=math.sqrt(score / len(targets)),
        underdetermined=len(targets) < 2,
    )
