#!/usr/bin/env python3
"""Fit the simulator's two contention knobs to measured p95 latencies.

Input: replica-count -> p95-ms pairs observed on a real deployment, e.g.
the bundled sample set measured on a 6-core/12-thread workstation under
1000 concurrent users.  Grid search over service_time_base_ms and
oversub_penalty; residuals are printed so nobody mistakes the fit for an
accuracy claim.

    python3 scripts/fit_contention_model.py
    python3 scripts/fit_contention_model.py --targets my_points.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from sepserve.sim import SimConfig, calibrate

# sample measurements: 1000 VUs against a 12-thread host, p95 in ms
SAMPLE_TARGETS = {3: 3300.0, 8: 1530.0, 12: 1410.0, 24: 1580.0, 48: 1860.0}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--targets", default=None,
                        help="JSON file mapping replica count to p95 ms")
    parser.add_argument("--threads", type=int, default=12)
    parser.add_argument("--vus", type=int, default=1000)
    parser.add_argument("--duration", type=float, default=10.0,
                        help="simulated seconds per grid point")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if args.targets:
        raw = json.loads(Path(args.targets).read_text())
        targets = {int(k): float(v) for k, v in raw.items()}
    else:
        targets = dict(SAMPLE_TARGETS)

    base = SimConfig(
        threads=args.threads, vus=args.vus,
        sim_duration_s=args.duration, seed=args.seed,
    )
    result = calibrate(
        targets,
        base,
        service_grid_ms=[8.0, 12.0, 15.0, 17.0, 20.0, 24.0],
        penalty_grid=[0.05, 0.08, 0.12, 0.2, 0.35, 0.6],
    )

    print(f"targets: {targets}")
    print(
        "fit: service_time_base_ms="
        f"{result.config.service_time_base_ms}, "
        f"oversub_penalty={result.config.oversub_penalty}"
    )
    print(f"rms relative p95 error: {result.rms_relative_error:.3f}")
    for replicas, residual in sorted(result.residuals.items()):
        print(f"  R={replicas:>3}: relative error {residual:+.3f}")
    if result.underdetermined:
        print("warning: single target point; the two knobs are underdetermined")


if __name__ == "__main__":
    main()
