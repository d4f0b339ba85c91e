#!/usr/bin/env python3
"""Replica-scaling experiment: p95 latency vs replica count.

Two modes:

  simulated (default)  deterministic queueing model, any hardware
      python3 scripts/replica_sweep.py --threads 12 --vus 1000 --seeds 3

  live                 real worker processes + built-in load generator
      python3 scripts/replica_sweep.py --live --store /tmp/store --vus 25

The live mode expects an ingested store (see `sepserve ingest`).  With the
default calibration and 12 threads, the simulated sweep shows latency
falling until the replica count matches the thread count and rising past
it as scheduler contention outweighs the extra replicas.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from sepserve.gbdt import bundled_model_path
from sepserve.report import render_replica_table, report_to_dict
from sepserve.sim import SimConfig, sweep_replicas


def run_simulated(args: argparse.Namespace) -> list[tuple[int, object]]:
    counts = [int(x) for x in args.sweep.split(",")]
    rows = []
    for seed in range(args.seeds):
        cfg = SimConfig(
            threads=args.threads,
            vus=args.vus,
            sim_duration_s=args.duration,
            seed=seed,
        )
        reports = sweep_replicas(cfg, counts)
        print(f"\nseed {seed}")
        print(render_replica_table(list(zip(counts, reports))))
        rows.append((seed, [report_to_dict(r) for r in reports]))
    return rows


def run_live(args: argparse.Namespace) -> list[tuple[int, object]]:
    from sepserve.loadgen import ScenarioConfig, run_scenario
    from sepserve.orchestrator import Orchestrator, ScalingConfig

    counts = [int(x) for x in args.sweep.split(",")]
    cfg = ScalingConfig(
        store_root=args.store,
        model_path=args.model or str(bundled_model_path()),
        replicas=counts[0],
        front_port=0,
    )
    orch = Orchestrator(cfg)
    orch.start(wait_healthy=True, timeout_s=180)
    reports = []
    try:
        import httpx

        pool = httpx.get(f"{orch.front_url}/patients", timeout=10).json()["patients"]
        for count in counts:
            orch.scale_to(count)
            orch.wait_converged(timeout_s=300)
            scenario = ScenarioConfig(
                target_url=orch.front_url,
                vus=args.vus,
                duration_s=args.duration,
                patient_id_pool=pool,
            )
            report = run_scenario(scenario)
            print(f"replicas={count}: p95={report.p95_ms:.1f} ms "
                  f"failed={report.failed_fraction:.2%}")
            reports.append((count, report))
    finally:
        orch.shutdown()
    print()
    print(render_replica_table(reports))
    return [(0, [report_to_dict(r) for _, r in reports])]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--sweep", default="3,8,12,24,48")
    parser.add_argument("--threads", type=int, default=12)
    parser.add_argument("--vus", type=int, default=1000)
    parser.add_argument("--duration", type=float, default=30.0)
    parser.add_argument("--seeds", type=int, default=3, help="simulated mode only")
    parser.add_argument("--live", action="store_true")
    parser.add_argument("--store", default="store", help="live mode store root")
    parser.add_argument("--model", default=None)
    parser.add_argument("--out", default=None, help="write JSON results here")
    args = parser.parse_args()

    rows = run_live(args) if args.live else run_simulated(args)
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2, sort_keys=True))
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
