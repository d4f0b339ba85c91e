import dataclasses
import json

import pytest

from sepserve.report import report_to_dict
from sepserve.sim import (
    CalibrationResult,
    InvalidConfigError,
    SimConfig,
    calibrate,
    simulate,
    sweep_replicas,
)


def closed(**over) -> SimConfig:
    base = dict(
        replicas=1, threads=12, vus=1, sim_duration_s=None, max_requests=1,
        service_dist="constant", service_time_base_ms=10.0, timeout_ms=None,
        seed=1,
    )
    base.update(over)
    return SimConfig(**base)


def test_single_request_exact_latency():
    report = simulate(closed())
    assert report.total_requests == 1
    assert report.successes == 1
    assert report.avg_ms == 10.0
    assert report.max_ms == 10.0


def test_balanced_closed_loop_no_queueing():
    # R = T, one VU per replica, constant service, zero think time
    report = simulate(
        closed(replicas=4, threads=4, vus=4, max_requests=None, sim_duration_s=2.0)
    )
    assert report.utilization == pytest.approx(1.0)
    assert report.avg_ms == pytest.approx(10.0)
    assert report.p95_ms == pytest.approx(10.0)
    assert report.max_ms == pytest.approx(10.0)


def test_mm1_mean_sojourn_matches_closed_form():
    # rho = 0.5: lambda 500/s against exponential service with mean 1 ms
    cfg = SimConfig(
        replicas=1, threads=4, vus=None, arrival_rate_per_s=500.0,
        service_dist="exponential", service_time_base_ms=1.0,
        sim_duration_s=None, max_requests=30_000, timeout_ms=None, seed=3,
    )
    report = simulate(cfg)
    theory_ms = 2.0  # 1 / (mu - lambda)
    assert report.mean_sojourn_ms == pytest.approx(theory_ms, rel=0.05)


def test_littles_law_on_steady_run():
    cfg = SimConfig(
        replicas=2, threads=4, vus=None, arrival_rate_per_s=600.0,
        service_dist="exponential", service_time_base_ms=2.0,
        sim_duration_s=None, max_requests=40_000, timeout_ms=None, seed=5,
    )
    report = simulate(cfg)
    lam = (report.successes + report.failures) / report.duration_s
    predicted_L = lam * report.mean_sojourn_ms / 1000.0
    assert report.in_system_mean == pytest.approx(predicted_L, rel=0.02)


def test_determinism_byte_identical_reports():
    cfg = SimConfig(replicas=6, threads=4, vus=50, sim_duration_s=3.0, seed=11)
    a = json.dumps(report_to_dict(simulate(cfg)), sort_keys=True)
    b = json.dumps(report_to_dict(simulate(cfg)), sort_keys=True)
    assert a == b
    c = json.dumps(
        report_to_dict(simulate(dataclasses.replace(cfg, seed=12))), sort_keys=True
    )
    assert a != c


def test_conservation_with_timeouts():
    cfg = SimConfig(
        replicas=1, threads=1, vus=50, service_dist="constant",
        service_time_base_ms=10.0, sim_duration_s=2.0, timeout_ms=50.0, seed=2,
    )
    report = simulate(cfg)
    assert report.failures > 0
    assert (
        report.total_requests
        == report.successes + report.failures + report.in_flight_at_end
    )
    assert 0.0 <= report.failed_fraction <= 1.0


def test_no_contention_more_replicas_never_hurt():
    # open loop + per-job service draws = common random numbers across R
    base = SimConfig(
        replicas=1, threads=8, vus=None, arrival_rate_per_s=50.0,
        service_dist="exponential", service_time_base_ms=10.0,
        sim_duration_s=None, max_requests=4000, timeout_ms=None, seed=9,
    )
    p95s = [
        simulate(dataclasses.replace(base, replicas=r)).p95_ms
        for r in (1, 2, 4, 8)
    ]
    assert all(a >= b for a, b in zip(p95s, p95s[1:]))


def test_oversubscription_monotonic_beyond_thread_count():
    base = SimConfig(
        replicas=5, threads=4, vus=200, service_dist="constant",
        service_time_base_ms=10.0, sim_duration_s=5.0, timeout_ms=None, seed=4,
    )
    p95s = [
        simulate(dataclasses.replace(base, replicas=r)).p95_ms
        for r in (5, 6, 8, 16)
    ]
    assert all(a <= b for a, b in zip(p95s, p95s[1:]))


def test_percentile_orderings_hold():
    report = simulate(
        SimConfig(replicas=3, threads=4, vus=40, sim_duration_s=3.0, seed=8)
    )
    assert report.p90_ms <= report.p95_ms <= report.max_ms
    assert report.avg_ms <= report.max_ms


def test_sweep_single_point():
    reports = sweep_replicas(
        SimConfig(threads=4, vus=20, sim_duration_s=2.0, seed=1), [1]
    )
    assert len(reports) == 1
    assert reports[0].replicas == 1


def test_sweep_same_seed_reproducible():
    cfg = SimConfig(threads=4, vus=30, sim_duration_s=2.0, seed=7)
    a = sweep_replicas(cfg, [2, 4])
    b = sweep_replicas(cfg, [2, 4])
    assert [report_to_dict(r) for r in a] == [report_to_dict(r) for r in b]


def test_default_calibration_u_shape_smoke():
    cfg = SimConfig(seed=0, sim_duration_s=8.0)
    reports = sweep_replicas(cfg, [3, 12, 48])
    by_r = {r.replicas: r.p95_ms for r in reports}
    assert by_r[3] > by_r[12] < by_r[48]


def test_invalid_configs_rejected():
    with pytest.raises(InvalidConfigError):
        simulate(SimConfig(replicas=0))
    with pytest.raises(InvalidConfigError):
        simulate(SimConfig(vus=10, arrival_rate_per_s=5.0))
    with pytest.raises(InvalidConfigError):
        simulate(SimConfig(vus=None, arrival_rate_per_s=None))
    with pytest.raises(InvalidConfigError):
        simulate(SimConfig(sim_duration_s=None, max_requests=None))
    with pytest.raises(InvalidConfigError):
        simulate(SimConfig(service_dist="weibull"))


def test_calibrate_recovers_generating_parameters():
    base = SimConfig(threads=4, vus=100, sim_duration_s=4.0, seed=6)
    truth = dataclasses.replace(base, service_time_base_ms=8.0, oversub_penalty=0.25)
    targets = {
        r: simulate(dataclasses.replace(truth, replicas=r)).p95_ms
        for r in (2, 8, 16)
    }
    result = calibrate(
        targets,
        base,
        service_grid_ms=[4.0, 8.0, 16.0],
        penalty_grid=[0.1, 0.25, 0.5],
    )
    assert isinstance(result, CalibrationResult)
    assert result.config.service_time_base_ms == 8.0
    assert result.config.oversub_penalty == 0.25
    assert result.rms_relative_error == pytest.approx(0.0, abs=1e-12)
    assert not result.underdetermined


def test_calibrate_single_point_underdetermined():
    result = calibrate(
        {4: 100.0},
        SimConfig(threads=4, vus=20, sim_duration_s=1.0, seed=1),
        service_grid_ms=[5.0, 10.0],
        penalty_grid=[0.1, 0.2],
    )
    assert result.underdetermined
    assert set(result.residuals) == {4}
