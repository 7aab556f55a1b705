"""Command-line driver.

Stores persist between commands as embedding files (the same frozen
byte format used for data interchange), so every command is a plain
read-mutate-write process:

    gen            synthesize a labeled embedding corpus (optional split)
    import         merge an embedding file into the retained store
    learn          insert one class's vectors from a data file (an
                   incremental-learning step at the data layer)
    unlearn        identify a class from exemplars and migrate it to the
                   unlearned store
    eval           score redirect strategies on a labeled test file; with
                   no paths, runs the bundled synthetic scenario
    sweep          membership-filter calibration table over a threshold grid
    simulate       pipeline timing for the three serving methods
    export-report  re-emit a stored evaluation report as kv, csv, or json

Errors print one ``error: <category>: <message>`` line on stderr and
exit nonzero. Identical flags and files produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import pipeline
from .data import SyntheticSpec, generate_synthetic, read_embeddings, split, write_embeddings
from .engine import UnlearnRequest, calibrate_threshold, sweep_threshold, unlearn
from .errors import ArgumentError, DataError, EngineError
from .inference import NearestCentroidSurrogate, Strategy
from .metrics import evaluate, report_from_json
from .protocol import ProtocolSettings, run_protocol
from .store import VectorStore, pair_stores


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--strategy", choices=[s.value for s in Strategy])
    common.add_argument("--filter-mode", choices=config_mod.FILTER_MODES)
    common.add_argument("--inverse-weighting", choices=config_mod.INVERSE_WEIGHTINGS)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="unlearndb",
        description="embedding-space incremental learning and unlearning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic embeddings")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--test-out", metavar="FILE",
                   help="also write a held-out split to this file")
    p.add_argument("--test-fraction", type=float, default=0.2)

    p = sub.add_parser("import", parents=[common],
                       help="merge an embedding file into the retained store")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--retained", required=True, metavar="FILE")

    p = sub.add_parser("learn", parents=[common],
                       help="insert one class's vectors from a data file")
    p.add_argument("--retained", required=True, metavar="FILE")
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--label", type=int, required=True, action="append",
                   help="class to insert (repeatable)")

    p = sub.add_parser("unlearn", parents=[common],
                       help="migrate a class to the unlearned store")
    p.add_argument("--retained", required=True, metavar="FILE")
    p.add_argument("--unlearned", required=True, metavar="FILE")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--from-class", type=int,
                       help="sample exemplars from this retained class")
    group.add_argument("--exemplar-file", metavar="FILE",
                       help="embedding file supplying the exemplars")
    p.add_argument("--exemplars", type=int, default=16,
                   help="sample size for --from-class")

    p = sub.add_parser("eval", parents=[common],
                       help="score strategies on a labeled test file")
    p.add_argument("--retained", metavar="FILE")
    p.add_argument("--unlearned", metavar="FILE")
    p.add_argument("--test", metavar="FILE")
    p.add_argument("--report-out", metavar="FILE", help="write the full JSON report here")

    p = sub.add_parser("sweep", parents=[common],
                       help="filter calibration table over a threshold grid")
    p.add_argument("--unlearned", required=True, metavar="FILE")
    p.add_argument("--test", required=True, metavar="FILE")
    p.add_argument("--grid", default="0.05:0.95:0.01", metavar="START:STOP:STEP")
    p.add_argument("--out", metavar="FILE", help="write the CSV here instead of stdout")
    p.add_argument("--calibrate", action="store_true",
                   help="also print the threshold nearest the reference operating point")

    p = sub.add_parser("simulate", parents=[common],
                       help="pipeline timing for the three serving methods")
    p.add_argument("--workload", metavar="NAME",
                   help=f"builtin workload: {', '.join(sorted(pipeline.BUILTIN_WORKLOADS))}")
    p.add_argument("--workload-file", metavar="FILE",
                   help="line-oriented workload description")
    p.add_argument("--method", choices=[m.value for m in pipeline.Method],
                   help="emit this method's full timeline instead of the summary")
    p.add_argument("--history", type=int, help="override the initial class count")
    p.add_argument("--cost-file", metavar="FILE", help="key=value cost overrides")
    p.add_argument("--train-per-class", type=float)
    p.add_argument("--embed-per-class", type=float)
    p.add_argument("--migrate-per-class", type=float)
    p.add_argument("--checkpoint-save", type=float)
    p.add_argument("--restore", type=float)
    p.add_argument("--out", metavar="FILE", help="write the CSV here instead of stdout")

    p = sub.add_parser("export-report", parents=[common],
                       help="re-emit a stored evaluation report")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--format", choices=("kv", "json", "csv"), default="kv")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")

    return parser


def _resolve_config(args: argparse.Namespace) -> config_mod.RunConfig:
    file_values = config_mod.load_config(args.config) if args.config else None
    cli_values = {
        "seed": args.seed,
        "threshold": args.threshold,
        "k": args.k,
        "strategy": args.strategy,
        "filter_mode": args.filter_mode,
        "inverse_weighting": args.inverse_weighting,
    }
    return config_mod.resolve_config(file_values, cli_values)


def _load_store(path: str, name: str, *, missing_ok: bool = False) -> VectorStore:
    store = VectorStore(name)
    p = Path(path)
    if not p.exists():
        if missing_ok:
            return store
        raise DataError(f"{name} store file {path} does not exist")
    store.insert_many(read_embeddings(p))
    return store


def _save_store(store: VectorStore, path: str) -> None:
    records = sorted(store.records(), key=lambda r: r.id)
    if not records:
        Path(path).write_bytes(b"")
        return
    write_embeddings(path, records)


def _load_store_pair(retained_path: str, unlearned_path: str,
                     *, retained_missing_ok: bool = False) -> tuple[VectorStore, VectorStore]:
    retained = _load_store(retained_path, "retained", missing_ok=retained_missing_ok)
    unlearned = VectorStore("unlearned")
    p = Path(unlearned_path)
    if p.exists() and p.stat().st_size > 0:
        unlearned.insert_many(read_embeddings(p))
    pair_stores(retained, unlearned)
    return retained, unlearned


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str) -> tuple[float, ...]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ArgumentError(f"grid must be START:STOP:STEP, got {spec!r}")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise ArgumentError(f"grid values must be numbers, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise ArgumentError(f"grid needs step > 0 and stop >= start, got {spec!r}")
    n = int(round((stop - start) / step))
    grid = [round(start + i * step, 10) for i in range(n + 1)]
    return tuple(g for g in grid if g <= stop + 1e-12)


def _cmd_gen(args, cfg) -> None:
    spec = SyntheticSpec(
        n_classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        spread=args.spread,
        seed=cfg.seed,
    )
    records = generate_synthetic(spec)
    if args.test_out:
        train, test = split(records, args.test_fraction, cfg.seed)
        write_embeddings(args.out, train)
        write_embeddings(args.test_out, test)
        print(f"wrote {len(train)} train records to {args.out}")
        print(f"wrote {len(test)} test records to {args.test_out}")
    else:
        write_embeddings(args.out, records)
        print(f"wrote {len(records)} records to {args.out}")
    print(f"classes={args.classes} per_class={args.per_class} dim={args.dim} "
          f"spread={args.spread!r} seed={cfg.seed}")


def _cmd_import(args, cfg) -> None:
    incoming = read_embeddings(args.infile)
    store = _load_store(args.retained, "retained", missing_ok=True)
    store.insert_many(incoming)
    _save_store(store, args.retained)
    labels = ",".join(str(x) for x in store.labels())
    print(f"imported {len(incoming)} records into {args.retained}")
    print(f"retained store: {len(store)} records, classes [{labels}]")


def _cmd_learn(args, cfg) -> None:
    data = read_embeddings(args.data)
    store = _load_store(args.retained, "retained")
    for label in args.label:
        batch = [r for r in data if r.label == label]
        if not batch:
            raise DataError(f"data file has no records with label {label}")
        store.insert_many(batch)
        print(f"learned class {label}: {len(batch)} vectors")
    _save_store(store, args.retained)
    print(f"retained store: {len(store)} records, {len(store.labels())} classes")


def _cmd_unlearn(args, cfg) -> None:
    retained, unlearned = _load_store_pair(args.retained, args.unlearned)
    if args.exemplar_file:
        exemplars = tuple(r.vector for r in read_embeddings(args.exemplar_file))
    else:
        members = sorted(
            (r for r in retained.records() if r.label == args.from_class),
            key=lambda r: r.id,
        )
        if not members:
            raise DataError(f"retained store has no class {args.from_class}")
        n = min(args.exemplars, len(members))
        rng = np.random.default_rng(cfg.seed)
        picks = sorted(rng.choice(len(members), size=n, replace=False).tolist())
        exemplars = tuple(members[i].vector for i in picks)
    report = unlearn(retained, unlearned, UnlearnRequest(exemplars, k=cfg.k))
    _save_store(retained, args.retained)
    _save_store(unlearned, args.unlearned)
    print(f"unlearned class {report.identified_label}: migrated {report.moved} vectors")
    print(f"exemplar agreement: {report.vote_fraction()!r}")


def _cmd_eval(args, cfg) -> None:
    if args.test is None and args.retained is None:
        result = run_protocol(ProtocolSettings(seed=cfg.seed))
        step = result.removal_steps()[-1]
        report = step.reports[cfg.strategy]
    elif args.test is None or args.retained is None:
        raise ArgumentError("eval needs both --retained and --test (or neither)")
    else:
        retained, unlearned = _load_store_pair(
            args.retained, args.unlearned or args.retained + ".unlearned"
        )
        test_records = read_embeddings(args.test)
        model = NearestCentroidSurrogate(retained, unlearned)
        report = evaluate(
            test_records,
            retained,
            unlearned,
            threshold=cfg.threshold,
            strategy=Strategy(cfg.strategy),
            model=model,
            seed=cfg.seed,
            filter_mode=cfg.filter_mode,
            inverse_weighting=cfg.inverse_weighting,
        )
    sys.stdout.write(report.to_kv_text())
    if args.report_out:
        Path(args.report_out).write_text(report.to_json_text(), encoding="utf-8")


def _cmd_sweep(args, cfg) -> None:
    unlearned = VectorStore("unlearned")
    unlearned.insert_many(read_embeddings(args.unlearned))
    test_records = read_embeddings(args.test)
    gone = set(unlearned.labels())
    labeled = [(r.vector, r.label in gone) for r in test_records]
    grid = _parse_grid(args.grid)
    calibration = sweep_threshold(unlearned, labeled, grid, mode=cfg.filter_mode)
    _emit(calibration.to_csv_text(), args.out)
    if args.calibrate:
        best = calibrate_threshold(calibration)
        print(f"calibrated_threshold={best!r}")


def _resolve_cost(args) -> pipeline.CostModel:
    values: dict[str, float] = {}
    if args.cost_file:
        text = Path(args.cost_file).read_text(encoding="utf-8")
        for key, raw in config_mod.parse_kv_lines(text).items():
            if key not in pipeline.CostModel.__dataclass_fields__:
                raise DataError(f"unknown cost key {key!r}")
            try:
                values[key] = float(raw)
            except ValueError:
                raise DataError(f"cost key {key!r}: cannot parse {raw!r}") from None
    for key in ("train_per_class", "embed_per_class", "migrate_per_class",
                "checkpoint_save", "restore"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    return pipeline.CostModel(**values)


def _cmd_simulate(args, cfg) -> None:
    if (args.workload is None) == (args.workload_file is None):
        raise ArgumentError("simulate needs exactly one of --workload / --workload-file")
    if args.workload:
        history, tasks = pipeline.builtin_workload(args.workload)
    else:
        text = Path(args.workload_file).read_text(encoding="utf-8")
        history, tasks = pipeline.parse_workload_text(text)
    if args.history is not None:
        history = args.history
    model = _resolve_cost(args)
    if args.method:
        timeline = pipeline.simulate(tasks, model, pipeline.Method(args.method), history)
        _emit(timeline.to_csv_text(), args.out)
        return
    timelines = {
        method: pipeline.simulate(tasks, model, method, history)
        for method in pipeline.Method
    }
    base = timelines[pipeline.Method.RETRAIN].makespan
    lines = ["method,makespan_s,speedup_vs_retrain"]
    for method in pipeline.Method:
        span = timelines[method].makespan
        ratio = base / span if span else float("inf")
        lines.append(f"{method.value},{span!r},{ratio!r}")
    _emit("\n".join(lines) + "\n", args.out)


def _cmd_export_report(args, cfg) -> None:
    report = report_from_json(Path(args.infile).read_text(encoding="utf-8"))
    if args.format == "kv":
        text = report.to_kv_text()
    elif args.format == "json":
        text = report.to_json_text()
    else:
        lines = ["true_label,predicted_label,count"]
        for (true_label, predicted), count in sorted(report.confusion.items()):
            lines.append(f"{true_label},{predicted},{count}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)


_COMMANDS = {
    "gen": _cmd_gen,
    "import": _cmd_import,
    "learn": _cmd_learn,
    "unlearn": _cmd_unlearn,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "simulate": _cmd_simulate,
    "export-report": _cmd_export_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _COMMANDS[args.command](args, cfg)
    except EngineError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: io: {exc.filename or exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: data: invalid report json: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: argument: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
