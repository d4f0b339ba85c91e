"""Single entry point exposing every workflow stage as a subcommand.

    sepserve ingest    --input raw/ --store store/
    sepserve serve     --replicas 3 --store store/ --model model.json
    sepserve scale     --url http://127.0.0.1:8350 12
    sepserve status    --url http://127.0.0.1:8350
    sepserve predict   --store store/ --model model.json --out preds.jsonl p1 p2
    sepserve loadtest  --url http://127.0.0.1:8350 --vus 50 --duration 10
    sepserve simulate  --sweep 3,8,12,24,48 --threads 12 --vus 1000
    sepserve report    --compare baseline.json candidate.json

Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from sepserve import __version__
from sepserve.config import ConfigStack, load_config_file
from sepserve.gbdt import bundled_model_path, load_model
from sepserve.loadgen import ScenarioConfig, Thresholds, run_scenario
from sepserve.records import PsvError, TransformError, parse_psv, to_clinical_document
from sepserve.report import (
    delta_p95,
    load_report,
    render_replica_table,
    render_scenario_table,
    render_verdicts,
    write_report_json,
)
from sepserve.sim import SimConfig, simulate, sweep_replicas
from sepserve.store import DocumentStore

logger = logging.getLogger("sepserve")

OK, FAILURE = 0, 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepserve", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"sepserve {__version__}")
    parser.add_argument("--config", help="TOML/JSON config file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw .psv files into the document store")
    p.add_argument("--input", required=True, help="directory of .psv files")
    p.add_argument("--store", required=True, help="document store root")
    p.add_argument("--hospital", default="unknown", choices=["A", "B", "unknown"])

    p = sub.add_parser("serve", help="run the replicated prediction service")
    p.add_argument("--replicas", default=None, help="count, or 'auto' for thread count")
    p.add_argument("--store", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="hardware thread override")
    p.add_argument("--policy", choices=["round_robin", "least_outstanding"], default=None)
    p.add_argument("--health-interval-ms", type=float, default=None)
    p.add_argument("--restart-backoff-ms", type=float, default=None)
    p.add_argument("--alert-threshold", type=float, default=None)
    p.add_argument("--extra-latency-ms", type=float, default=None)

    p = sub.add_parser("scale", help="change the desired replica count of a running pool")
    p.add_argument("replicas", type=int)
    p.add_argument("--url", required=True, help="front endpoint base URL")

    p = sub.add_parser("status", help="show pool status of a running deployment")
    p.add_argument("--url", required=True)

    p = sub.add_parser("predict", help="batch inference against the local store")
    p.add_argument("patient_ids", nargs="*", help="ids; defaults to all stored patients")
    p.add_argument("--ids-file", default=None, help="file with one patient id per line")
    p.add_argument("--store", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--out", required=True, help="output path (JSON lines)")
    p.add_argument("--alert-threshold", type=float, default=None)

    p = sub.add_parser("loadtest", help="closed-loop VU load test against a deployment")
    p.add_argument("--url", required=True)
    p.add_argument("--vus", type=int, default=None)
    p.add_argument("--duration", type=float, default=None, help="seconds")
    p.add_argument("--ramp-up", type=float, default=None, help="seconds")
    p.add_argument("--timeout-ms", type=float, default=None)
    p.add_argument("--patients", default=None, help="comma-separated id pool")
    p.add_argument("--p95-limit-ms", type=float, default=None)
    p.add_argument("--fail-rate-limit", type=float, default=None)
    p.add_argument("--out", default=None, help="write JSON report here")

    p = sub.add_parser("simulate", help="deterministic queueing simulation of the pool")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--sweep", default=None, help="comma-separated replica counts")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--vus", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=None, help="simulated seconds")
    p.add_argument("--service-ms", type=float, default=None)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--timeout-ms", type=float, default=None)
    p.add_argument("--out", default=None, help="write JSON report(s) here")

    p = sub.add_parser("report", help="render saved reports / compare p95s")
    p.add_argument("reports", nargs="*", help="report JSON files to render")
    p.add_argument("--compare", nargs=2, metavar=("BASELINE", "CANDIDATE"))

    return parser


def _stack(args: argparse.Namespace) -> ConfigStack:
    file_cfg = load_config_file(args.config) if args.config else {}
    return ConfigStack(file_cfg)


def cmd_ingest(args: argparse.Namespace, stack: ConfigStack) -> int:
    clinical = stack.clinical()
    store = DocumentStore(args.store)
    files = sorted(Path(args.input).glob("*.psv"))
    ok, errors = 0, {}
    for path in files:
        try:
            record = parse_psv(
                path.read_bytes(),
                patient_id=path.stem,
                source_hospital=args.hospital,
                source_file=path.name,
                config=clinical,
            )
            store.put(to_clinical_document(record, clinical))
            ok += 1
        except (PsvError, TransformError, OSError) as exc:
            errors[path.name] = f"{type(exc).__name__}: {exc}"
            logger.error("ingest failed for %s: %s", path.name, exc)
    summary = {"ok": ok, "failed": len(errors), "errors": errors}
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"ingested ok={ok} failed={len(errors)}")
        for name, err in errors.items():
            print(f"  {name}: {err}", file=sys.stderr)
    return OK if not errors else FAILURE


def cmd_serve(args: argparse.Namespace, stack: ConfigStack) -> int:
    from sepserve.orchestrator import (
        Orchestrator,
        ScalingConfig,
        detect_threads,
        run_until_signalled,
    )

    store_root = stack.resolve(args.store, "service", "store_root", "store")
    model_path = stack.resolve(
        args.model, "service", "model_path", str(bundled_model_path())
    )
    threads = stack.resolve(args.threads, "orchestrator", "detected_threads", None, int)
    replicas_raw = stack.resolve(args.replicas, "orchestrator", "replicas", "1")
    probe_cfg = ScalingConfig(
        store_root=store_root, model_path=model_path, detected_threads=threads
    )
    detected = detect_threads(probe_cfg)
    replicas = detected if str(replicas_raw) == "auto" else int(replicas_raw)

    cfg = ScalingConfig(
        store_root=store_root,
        model_path=model_path,
        replicas=replicas,
        detected_threads=threads,
        dispatch_policy=stack.resolve(
            args.policy, "orchestrator", "dispatch_policy", "round_robin"
        ),
        health_interval_ms=stack.resolve(
            args.health_interval_ms, "orchestrator", "health_interval_ms", 1000.0, float
        ),
        restart_backoff_ms=stack.resolve(
            args.restart_backoff_ms, "orchestrator", "restart_backoff_ms", 1000.0, float
        ),
        front_host=stack.resolve(args.host, "orchestrator", "front_host", "127.0.0.1"),
        front_port=stack.resolve(args.port, "orchestrator", "front_port", 8350, int),
        alert_threshold=stack.resolve(
            args.alert_threshold, "service", "alert_threshold", 0.5, float
        ),
        extra_latency_ms=stack.resolve(
            args.extra_latency_ms, "service", "extra_latency_ms", 0.0, float
        ),
    )
    print(f"detected hardware threads: {detected}")
    print(f"recommended replicas: {detected}")
    orchestrator = Orchestrator(cfg)

    def on_ready() -> None:
        print(f"front endpoint: {orchestrator.front_url}")
        print(f"serving {cfg.replicas} replicas (policy {cfg.dispatch_policy})")
        sys.stdout.flush()

    return run_until_signalled(orchestrator, on_ready)


def _admin_request(url: str, path: str, payload: Optional[dict] = None) -> dict:
    import httpx

    with httpx.Client(timeout=10.0) as client:
        if payload is None:
            resp = client.get(f"{url}{path}")
        else:
            resp = client.post(f"{url}{path}", json=payload)
        resp.raise_for_status()
        return resp.json()


def cmd_scale(args: argparse.Namespace, _stack: ConfigStack) -> int:
    result = _admin_request(args.url, "/admin/scale", {"replicas": args.replicas})
    print(json.dumps(result) if args.json else f"desired replicas: {result['desired']}")
    return OK


def cmd_status(args: argparse.Namespace, _stack: ConfigStack) -> int:
    status = _admin_request(args.url, "/admin/status")
    if args.json:
        print(json.dumps(status, sort_keys=True))
        return OK
    print(
        f"desired={status['desired']} healthy={status['healthy']} "
        f"threads={status['detected_threads']} "
        f"recommended={status['recommended_replicas']} "
        f"served={status['total_served']}"
    )
    for rep in status["replicas"]:
        print(
            f"  {rep['replica_id']}: {rep['status']} served={rep['served_count']} "
            f"restarts={rep['restarts']} port={rep['port']}"
        )
    return OK


def cmd_predict(args: argparse.Namespace, stack: ConfigStack) -> int:
    from sepserve.service import run_batch

    store = DocumentStore(args.store)
    model = load_model(
        stack.resolve(args.model, "service", "model_path", str(bundled_model_path()))
    )
    ids = list(args.patient_ids)
    if args.ids_file:
        ids.extend(
            ln.strip() for ln in Path(args.ids_file).read_text().splitlines() if ln.strip()
        )
    if not ids:
        ids = store.list_patients()
    threshold = stack.resolve(
        args.alert_threshold, "service", "alert_threshold", 0.5, float
    )
    outcome = run_batch(store, model, ids, args.out, threshold)
    if args.json:
        print(json.dumps(vars(outcome), sort_keys=True))
    else:
        print(f"predicted ok={outcome.ok} failed={outcome.failed}")
        for pid, err in outcome.errors.items():
            print(f"  {pid}: {err}", file=sys.stderr)
    return OK if outcome.failed == 0 else FAILURE


def cmd_loadtest(args: argparse.Namespace, stack: ConfigStack) -> int:
    from sepserve.loadgen import TargetUnreachableError

    pool: list[str]
    if args.patients:
        pool = [p for p in args.patients.split(",") if p]
    else:
        try:
            pool = _admin_request(args.url, "/patients")["patients"]
        except Exception as exc:
            print(f"could not list patients from target: {exc}", file=sys.stderr)
            return FAILURE
    if not pool:
        print("no patients available to test against", file=sys.stderr)
        return FAILURE

    cfg = ScenarioConfig(
        target_url=args.url,
        vus=stack.resolve(args.vus, "loadgen", "vus", 50, int),
        duration_s=stack.resolve(args.duration, "loadgen", "duration_s", 10.0, float),
        ramp_up_s=stack.resolve(args.ramp_up, "loadgen", "ramp_up_s", 0.0, float),
        patient_id_pool=pool,
        request_timeout_ms=stack.resolve(
            args.timeout_ms, "loadgen", "request_timeout_ms", 10_000.0, float
        ),
        thresholds=Thresholds(
            p95_ms=stack.resolve(args.p95_limit_ms, "loadgen", "p95_ms", 500.0, float),
            fail_rate=stack.resolve(
                args.fail_rate_limit, "loadgen", "fail_rate", 0.01, float
            ),
        ),
    )
    try:
        report = run_scenario(cfg)
    except TargetUnreachableError as exc:
        print(f"target unreachable: {exc}", file=sys.stderr)
        return FAILURE
    if args.out:
        write_report_json(report, args.out)
    if args.json:
        print(json.dumps(vars_or_dict(report), sort_keys=True))
    else:
        print(render_scenario_table([report]))
        print(render_verdicts(report.threshold_verdicts))
    return OK


def cmd_simulate(args: argparse.Namespace, stack: ConfigStack) -> int:
    base = SimConfig(
        replicas=stack.resolve(args.replicas, "sim", "replicas", 3, int),
        threads=stack.resolve(args.threads, "sim", "threads", 12, int),
        vus=stack.resolve(args.vus, "sim", "vus", 1000, int),
        seed=stack.resolve(args.seed, "sim", "seed", 0, int),
        sim_duration_s=stack.resolve(args.duration, "sim", "sim_duration_s", 30.0, float),
        service_time_base_ms=stack.resolve(
            args.service_ms, "sim", "service_time_base_ms", 17.0, float
        ),
        oversub_penalty=stack.resolve(args.penalty, "sim", "oversub_penalty", 0.12, float),
        timeout_ms=stack.resolve(args.timeout_ms, "sim", "timeout_ms", 10_000.0, float),
    )
    if args.sweep:
        counts = [int(x) for x in args.sweep.split(",") if x]
        reports = sweep_replicas(base, counts)
        if args.out:
            write_report_json([vars_or_dict(r) for r in reports], args.out)
        if args.json:
            print(json.dumps([vars_or_dict(r) for r in reports], sort_keys=True))
        else:
            print(render_replica_table(list(zip(counts, reports))))
        return OK
    report = simulate(base)
    if args.out:
        write_report_json(report, args.out)
    if args.json:
        print(json.dumps(vars_or_dict(report), sort_keys=True))
    else:
        print(render_replica_table([(base.replicas, report)]))
        print(render_verdicts(report.threshold_verdicts))
    return OK


def vars_or_dict(report) -> dict:
    import dataclasses

    return dataclasses.asdict(report) if dataclasses.is_dataclass(report) else dict(report)


def cmd_report(args: argparse.Namespace, _stack: ConfigStack) -> int:
    if args.compare:
        base_path, cand_path = args.compare
        try:
            baseline = load_report(base_path)
            candidate = load_report(cand_path)
        except OSError as exc:
            print(f"cannot read report: {exc}", file=sys.stderr)
            return FAILURE
        delta = delta_p95(baseline["p95_ms"], candidate["p95_ms"])
        if args.json:
            print(json.dumps({
                "baseline_p95_ms": baseline["p95_ms"],
                "candidate_p95_ms": candidate["p95_ms"],
                "delta_p95_pct": delta,
            }, sort_keys=True))
        else:
            print(f"baseline p95: {baseline['p95_ms']:.1f} ms")
            print(f"candidate p95: {candidate['p95_ms']:.1f} ms")
            print(f"delta p95: {delta:+.1f}%")
        return OK
    if not args.reports:
        print("nothing to do: pass report files or --compare", file=sys.stderr)
        return FAILURE
    try:
        reports = [load_report(p) for p in args.reports]
    except OSError as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return FAILURE
    print(render_scenario_table(reports))
    return OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "serve": cmd_serve,
    "scale": cmd_scale,
    "status": cmd_status,
    "predict": cmd_predict,
    "loadtest": cmd_loadtest,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        stack = _stack(args)
    except (OSError, ValueError) as exc:
        print(f"cannot load config: {exc}", file=sys.stderr)
        return FAILURE
    try:
        return _COMMANDS[args.command](args, stack)
    except KeyboardInterrupt:
        return FAILURE
    except Exception as exc:  # operational failures exit 1, never tracebacks
        logger.debug("unhandled error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
