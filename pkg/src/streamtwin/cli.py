"""Command-line entry points for the full pipeline and the what-if service."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .engagement import HORIZON_GRID
from .errors import StreamTwinError
from .events import group_sessions, parse_event_log, write_events_csv
from .learner.serialize import load_model, save_model
from .pipeline.features import read_records_csv, write_records_csv
from .pipeline.selection import load_catalog, load_splits, save_catalog, save_splits
from .synth import FAMILIES, SynthConfig, generate_corpus
from .twins import load_sensitivities, store_sensitivities, train_twins
from .util import canonical_json
from .workflow import full_run, process, write_plot_data

__all__ = ["main", "build_parser"]


def _infer_format(path: str, override: str | None) -> str:
    if override:
        return override
    return "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"


def _load_sessions(path: str, fmt: str | None):
    events, report = parse_event_log(path, _infer_format(path, fmt))
    return group_sessions(events), report


def cmd_ingest(args: argparse.Namespace) -> int:
    events, report = parse_event_log(args.input, _infer_format(args.input, args.format))
    write_events_csv(events, args.out)
    print(canonical_json(report.as_dict()))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    with open(args.config) as handle:
        raw = json.load(handle)
    known = {
        "n_users",
        "sessions_per_user",
        "seed",
        "archetype_mix",
        "n_videos",
        "duration_range",
        "noise_sd",
    }
    unknown = set(raw) - known
    if unknown:
        raise StreamTwinError(f"unknown synth config key(s): {sorted(unknown)}")
    if "duration_range" in raw:
        raw["duration_range"] = tuple(raw["duration_range"])
    if "archetype_mix" in raw:
        raw["archetype_mix"] = dict(raw["archetype_mix"])
    config = SynthConfig(**raw)
    events, truths, users = generate_corpus(config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_events_csv(events, out / "events.csv")
    with open(out / "ground_truth.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user_id", "session_id", "video_id", "engagement", *FAMILIES])
        for truth in truths:
            writer.writerow(
                [
                    truth.user_id,
                    truth.session_id,
                    truth.video_id,
                    repr(truth.engagement),
                    *(repr(truth.penalties[family]) for family in FAMILIES),
                ]
            )
    with open(out / "users.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user_id", "archetype", "device_class", *FAMILIES])
        for user in users:
            writer.writerow(
                [
                    user.user_id,
                    user.archetype,
                    user.device_class,
                    *(repr(user.latent_weights[family]) for family in FAMILIES),
                ]
            )
    print(f"wrote {len(events)} events for {len(users)} users to {out}")
    return 0


def cmd_process(args: argparse.Namespace) -> int:
    sessions, parse_report = _load_sessions(args.sessions, args.format)
    data = process(sessions, seed=args.seed, threshold=args.threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(data.records, out / "records.csv")
    save_catalog(data.catalog, out / "catalog.json")
    save_splits(data.splits, args.seed, out / "splits.json")
    with open(out / "clean_report.json", "w") as handle:
        handle.write(canonical_json(data.clean_report.as_dict()) + "\n")
    print(
        f"parsed {parse_report.parsed} events, kept {len(data.records)} balanced "
        f"records for {len(data.splits)} users; "
        f"selected {len(data.catalog.selected_names)} features"
    )
    return 0


def cmd_train_twins(args: argparse.Namespace) -> int:
    records = read_records_csv(args.records)
    splits = load_splits(args.splits)
    catalog = load_catalog(args.catalog)
    entries, vectors = train_twins(records, splits, catalog, args.seed)
    store_sensitivities(vectors, catalog.selected_names, args.out)
    if args.models:
        models_dir = Path(args.models)
        models_dir.mkdir(parents=True, exist_ok=True)
        for entry in entries:
            save_model(
                entry.model,
                models_dir / f"{entry.user_id}.json",
                extra={
                    "twin": {
                        "user_id": entry.user_id,
                        "config": entry.config,
                        "train_mae": entry.train_mae,
                        "test_mae": entry.test_mae,
                        "n_train": entry.n_train,
                        "n_test": entry.n_test,
                        "degenerate": entry.degenerate,
                    }
                },
            )
    n_degenerate = sum(1 for v in vectors if v.degenerate)
    print(f"trained {len(entries)} twins ({n_degenerate} degenerate) -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    sessions, _ = _load_sessions(args.sessions, args.format)
    horizons = [h.strip() for h in args.horizons.split(",") if h.strip()]
    sweep = (
        [float(t) for t in args.thresholds.split(",") if t.strip()]
        if args.thresholds
        else None
    )
    report, data, models = full_run(
        sessions,
        seed=args.seed,
        threshold=args.threshold,
        horizons=horizons,
        sweep_thresholds=sweep,
        include_timing=not args.no_timing,
    )
    with open(args.report, "w") as handle:
        handle.write(canonical_json(report) + "\n")
    if args.model:
        save_model(models.unified, args.model)
    if args.sensitivities:
        store_sensitivities(models.vectors, data.catalog.selected_names, args.sensitivities)
    if args.catalog:
        save_catalog(data.catalog, args.catalog)
    if args.plot_data:
        for path in write_plot_data(report, args.plot_data):
            print(f"plot data: {path}")
    print(f"report: {args.report}")
    return 0


def _load_scenarios(path: str):
    from .whatif.simulator import DEFAULT_LADDER, WhatIfScenario

    with open(path) as handle:
        raw = json.load(handle)
    if isinstance(raw, dict):
        raw = raw.get("scenarios", raw)
    if not isinstance(raw, list):
        raise StreamTwinError("scenario file must hold a list or {'scenarios': [...]}")
    scenarios = []
    for item in raw:
        ladder = item.get("ladder")
        scenarios.append(
            WhatIfScenario(
                trace=item["trace"],
                abr=item.get("abr", "hybrid-low-latency"),
                segment_size=float(item.get("segment_size", 2.0)),
                video_duration=float(item.get("video_duration", 600.0)),
                ladder=tuple((float(b), str(r)) for b, r in ladder)
                if ladder
                else DEFAULT_LADDER,
                n_sessions=int(item.get("n_sessions", 10)),
                cohort=tuple(item["cohort"])
                if isinstance(item.get("cohort"), list)
                else item.get("cohort", "random:10"),
                seed=int(item.get("seed", 0)),
                name=item.get("name"),
            )
        )
    return scenarios


def cmd_whatif(args: argparse.Namespace) -> int:
    from .whatif.engine import run_whatif
    from .whatif.traces import builtin_traces

    model = load_model(args.model)
    vectors, _ = load_sensitivities(args.sensitivities)
    scenarios = _load_scenarios(args.scenario)
    result = run_whatif(scenarios, model, vectors, builtin_traces())
    payload = canonical_json(result.as_dict())
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(payload + "\n")
        print(f"result: {args.out}")
    else:
        print(payload)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .whatif.service import create_app, serve
    from .whatif.traces import builtin_traces

    model = load_model(args.model)
    catalog = load_catalog(args.catalog)
    vectors, _ = load_sensitivities(args.sensitivities, catalog)
    app = create_app(model, vectors, catalog, builtin_traces(), session_cap=args.session_cap)
    serve(app, args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamtwin",
        description="Session-event pipeline, per-user twins, engagement model, what-if service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw event log into the normalized CSV form")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic population with known ground truth")
    p.add_argument("--config", required=True, help="JSON file of generator settings")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("process", help="clean, compress, balance, split, select features")
    p.add_argument("--sessions", required=True, help="event log (CSV or JSONL)")
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("train-twins", help="fit per-user twins and export sensitivities")
    p.add_argument("--records", required=True, help="records.csv from `process`")
    p.add_argument("--splits", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="sensitivities CSV path")
    p.add_argument("--models", default=None, help="directory for per-user model files")
    p.set_defaults(func=cmd_train_twins)

    p = sub.add_parser("evaluate", help="full run: report across time horizons")
    p.add_argument("--sessions", required=True, help="event log (CSV or JSONL)")
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--horizons", default=",".join(HORIZON_GRID))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--thresholds", default=None, help="comma list for a threshold sweep")
    p.add_argument("--report", required=True)
    p.add_argument("--plot-data", default=None, help="directory for plotting CSVs")
    p.add_argument("--model", default=None, help="also save the unified model here")
    p.add_argument("--sensitivities", default=None, help="also save the sensitivity db here")
    p.add_argument("--catalog", default=None, help="also save the feature catalog here")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("whatif", help="batch scenario comparison against a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--sensitivities", required=True)
    p.add_argument("--scenario", required=True, help="JSON scenario list")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="run the what-if HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--sensitivities", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--session-cap", type=int, default=5000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StreamTwinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
