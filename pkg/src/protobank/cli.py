"""Command-line front end.

Subcommands mirror the pipeline stages: `synth` makes embedding files,
`split` previews/validates a task scenario, `train` fills a bank and writes
its snapshot, `eval` scores a snapshot against a test file, and `bench` runs
train+eval end to end, emitting the JSON run report.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bank import MemoryBank
from .embio import read_embeddings, synth_gaussian, write_embeddings
from .errors import ProtobankError
from .harness import (
    RunConfig,
    RunReport,
    matrix_to_csv,
    render_report,
    run_evaluation,
    run_training,
    run_benchmark,
)
from .stream import make_nc_scenario, validate_stream
from .vectors import Metric

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_EPILOG = """\
exit codes:
  0  success
  1  runtime error (bad file, protocol violation, infeasible split, ...)
  2  usage error (unknown flag, missing argument, malformed value)
"""


def _bool_flag(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protobank",
        description="Prototype-bank continual learning over precomputed embeddings.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="JSON file with default values for any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *names: str) -> None:
        if "train" in names:
            p.add_argument("--train", help="training embedding file")
        if "test" in names:
            p.add_argument("--test", help="test embedding file")
        if "tasks" in names:
            p.add_argument("--tasks", type=int, help="number of incremental tasks")
        if "metric" in names:
            p.add_argument("--metric", choices=["l2", "cosine"], help="distance/similarity")
        if "mode" in names:
            p.add_argument("--mode", choices=["agnostic", "aware"], help="test-time task identity")
        if "normalize" in names:
            p.add_argument("--normalize", type=_bool_flag, metavar="BOOL",
                           help="unit-normalize features before use (true/false)")
        if "unsupervised" in names:
            p.add_argument("--unsupervised", action="store_true", default=None,
                           help="replace labels with k-means pseudo-labels")
            p.add_argument("--k", type=int, help="clusters per task (unsupervised mode)")
        if "seed" in names:
            p.add_argument("--seed", type=int, help="seed for every stochastic step")
        if "strict-nc" in names:
            p.add_argument("--strict-nc", dest="strict_nc", type=_bool_flag, metavar="BOOL",
                           help="treat class reappearance as an error (true/false)")
        if "out" in names:
            p.add_argument("--out", help="output path")
        if "csv" in names:
            p.add_argument("--csv", help="also write the accuracy matrix as CSV")

    p_split = sub.add_parser("split", help="build and validate a task scenario")
    add_common(p_split, "train", "tasks", "strict-nc")

    p_train = sub.add_parser("train", help="fill a bank and write its snapshot")
    add_common(p_train, "train", "tasks", "normalize", "unsupervised", "seed", "strict-nc", "out")

    p_eval = sub.add_parser("eval", help="score a bank snapshot against a test file")
    p_eval.add_argument("--bank", help="bank snapshot produced by train")
    add_common(p_eval, "test", "tasks", "metric", "mode", "normalize", "unsupervised",
               "seed", "out", "csv")

    p_bench = sub.add_parser("bench", help="end-to-end train+eval with accuracy matrix")
    add_common(
        p_bench,
        "train", "test", "tasks", "metric", "mode", "normalize", "unsupervised",
        "seed", "strict-nc", "out", "csv",
    )

    p_synth = sub.add_parser("synth", help="write a synthetic Gaussian embedding file")
    p_synth.add_argument("--classes", type=int, help="number of classes (>= 2)")
    p_synth.add_argument("--per-class", dest="per_class", type=int, help="examples per class")
    p_synth.add_argument("--dim", type=int, help="embedding dimension")
    p_synth.add_argument("--sep", type=float, help="minimum center distance in sigmas")
    p_synth.add_argument("--seed", type=int, help="generator seed")
    p_synth.add_argument("--split", help="split tag written to the header (default: train)")
    p_synth.add_argument("--out", help="output path")

    return parser


_DEFAULTS = {
    "tasks": 1,
    "metric": "l2",
    "mode": "agnostic",
    "normalize": False,
    "unsupervised": False,
    "k": None,
    "seed": 0,
    "strict_nc": True,
    "classes": 10,
    "per_class": 100,
    "dim": 64,
    "sep": 10.0,
    "split": "train",
}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flag values over config-file values over built-in defaults."""
    file_values: dict = {}
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ProtobankError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ProtobankError(f"config file {args.config} must hold a JSON object")

    merged = {}
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        if value is not None:
            merged[key] = value
        elif key in file_values:
            merged[key] = file_values[key]
        else:
            merged[key] = _DEFAULTS.get(key)
    return merged


def _require(merged: dict, *keys: str) -> None:
    missing = [k for k in keys if merged.get(k) is None]
    if missing:
        raise ProtobankError("missing required option(s): " + ", ".join(f"--{m}" for m in missing))


def _run_config(merged: dict) -> RunConfig:
    return RunConfig(
        train_path=merged.get("train"),
        test_path=merged.get("test"),
        n_tasks=merged["tasks"],
        metric=Metric(merged.get("metric") or "l2"),
        mode=merged.get("mode") or "agnostic",
        strict_nc=merged.get("strict_nc", True),
        normalize=bool(merged.get("normalize")),
        unsupervised=bool(merged.get("unsupervised")),
        k=merged.get("k"),
        seed=merged.get("seed") or 0,
        out_path=merged.get("out"),
    )


def _cmd_split(merged: dict) -> int:
    _require(merged, "train")
    dataset = read_embeddings(merged["train"])
    stream = make_nc_scenario(dataset.records, merged["tasks"])
    report = validate_stream(stream, strict_nc=merged.get("strict_nc", True))
    print(f"file: {merged['train']} ({len(dataset)} records, dim {dataset.dim}, "
          f"backbone {dataset.backbone_tag!r}, split {dataset.split_tag!r})")
    for task in stream.tasks:
        print(f"task {task.task_id}: classes {list(task.class_ids)}, {len(task.examples)} examples")
    for msg in report.warnings:
        print(f"warning: {msg}")
    for msg in report.errors:
        print(f"error: {msg}")
    return EXIT_RUNTIME if report.errors else EXIT_OK


def _cmd_train(merged: dict) -> int:
    _require(merged, "train", "out")
    config = _run_config(merged)
    dataset = read_embeddings(merged["train"])
    stream = make_nc_scenario(dataset.records, config.n_tasks)
    bank = run_training(stream, config)
    Path(merged["out"]).write_bytes(bank.snapshot())
    print(f"bank: {len(bank)} prototypes, dim {bank.dim}, "
          f"{bank.memory_bytes()} bytes ({bank.memory_kib():g} KiB) -> {merged['out']}")
    return EXIT_OK


def _report_json_text(report: RunReport, out: str | None, csv: str | None = None) -> None:
    text = render_report(report)
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="")
    if csv:
        Path(csv).write_text(matrix_to_csv(report))


def _cmd_eval(merged: dict) -> int:
    _require(merged, "bank", "test")
    config = _run_config(merged)
    bank = MemoryBank.restore(Path(merged["bank"]).read_bytes())
    dataset = read_embeddings(merged["test"])
    test_stream = make_nc_scenario(dataset.records, config.n_tasks)
    row = run_evaluation(bank, test_stream, config)
    report = RunReport(
        config=config.to_dict(),
        n_tasks=config.n_tasks,
        n_classes=len(bank),
        dim=bank.dim or 0,
        class_order=[c for t in test_stream.tasks for c in t.class_ids],
        accuracy_matrix=[row.accuracies],
        final_average_accuracy=sum(row.accuracies) / len(row.accuracies),
        final_accuracy=row.overall.accuracy,
        per_class=row.overall.per_class,
        missing_classes=list(row.overall.missing_classes),
        memory_bytes=bank.memory_bytes(),
        memory_kib=bank.memory_kib(),
    )
    _report_json_text(report, merged.get("out"), merged.get("csv"))
    return EXIT_OK


def _cmd_bench(merged: dict) -> int:
    _require(merged, "train", "test")
    config = _run_config(merged)
    train_ds = read_embeddings(merged["train"])
    test_ds = read_embeddings(merged["test"])
    report, _bank = run_benchmark(train_ds, test_ds, config)
    _report_json_text(report, merged.get("out"), merged.get("csv"))
    if merged.get("out"):
        print(f"final accuracy {report.final_accuracy:.4f} "
              f"(average {report.final_average_accuracy:.4f}) -> {merged['out']}")
    return EXIT_OK


def _cmd_synth(merged: dict) -> int:
    _require(merged, "out")
    dataset = synth_gaussian(
        classes=merged["classes"],
        per_class=merged["per_class"],
        dim=merged["dim"],
        separation=merged["sep"],
        seed=merged["seed"],
        split_tag=merged.get("split") or "train",
    )
    write_embeddings(dataset, merged["out"])
    print(f"wrote {len(dataset)} records (dim {dataset.dim}) -> {merged['out']}")
    return EXIT_OK


_COMMANDS = {
    "split": _cmd_split,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _resolve(args)
        return _COMMANDS[args.command](merged)
    except (ProtobankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
