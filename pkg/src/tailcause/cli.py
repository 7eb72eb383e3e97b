"""Command-line entry point: ``tailcause {simulate,score,pipeline,source-node}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import samplers
from .errors import (
    DataError,
    FitError,
    HeavyWeightError,
    InsufficientDataError,
    NonIdentifiableError,
    ParameterError,
    TailCauseError,
)
from .inference import BootstrapConfig
from .margins import ThresholdSpec
from .pipeline import SCHEMA_VERSION, PipelineConfig, WindowConfig, run_pipeline, write_json

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ParameterError, UsageError)):
        return EXIT_USAGE
    if isinstance(exc, (FitError, NonIdentifiableError, HeavyWeightError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, InsufficientDataError, OSError)):
        return EXIT_DATA
    if isinstance(exc, TailCauseError):
        return EXIT_DATA
    raise exc


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"parameter {item!r} is not of the form key=value")
        params[key.strip()] = _parse_value(value.strip())
    return params


def simulate_cmd(tag: str, params: dict, n: int, seed, out) -> Path:
    """Write a generated dataset to ``out`` plus a ``.meta.json`` sidecar."""
    values, names = samplers.simulate(tag, params, n, seed)
    out = Path(out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        writer.writerows(values.tolist())
    meta = {
        "schema_version": SCHEMA_VERSION,
        "generator": tag,
        "params": params,
        "n": n,
        "seed": seed,
        "columns": list(names),
    }
    write_json(meta, out.with_name(out.name + ".meta.json"))
    return out


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _aggregators(text) -> dict:
    out = {}
    for item in _split(text):
        name, sep, agg = item.partition("=")
        if not sep:
            raise UsageError(f"aggregator {item!r} is not of the form column=sum|mean|center")
        out[name.strip()] = agg.strip()
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None


def build_pipeline_config(args, bootstrap_default: int) -> PipelineConfig:
    base = load_config(args.config) if args.config else {}
    if args.input:
        base["input"] = args.input
    if args.output:
        base["output"] = args.output
    if "input" not in base or "output" not in base:
        raise UsageError("--input and --output are required (directly or via --config)")
    cfg = PipelineConfig.from_dict(base)
    if args.group_col:
        cfg.group_col = args.group_col
    if args.time_col:
        cfg.time_col = args.time_col
    if args.columns:
        cfg.columns = _split(args.columns)
    if args.zero_filter_cols:
        cfg.zero_filter_cols = tuple(_split(args.zero_filter_cols))
    if args.csv_output:
        cfg.csv_output = args.csv_output
    if args.threshold_q is not None:
        cfg.threshold = ThresholdSpec(q=args.threshold_q)
    if args.transform:
        cfg.method = "gp_fit" if args.transform == "gpfit" else "rank"
    if args.window is not None or args.aggregators:
        cfg.window = WindowConfig(
            length=args.window if args.window is not None else 3,
            aggregators=_aggregators(args.aggregators),
            default=args.window_default,
        )
    from_file = base.get("bootstrap") is not None
    b = cfg.bootstrap if from_file else BootstrapConfig(replicates=max(bootstrap_default, 2))
    if args.bootstrap_n is not None:
        replicates = args.bootstrap_n
    else:
        replicates = b.replicates if from_file else bootstrap_default
    if replicates <= 0:
        cfg.bootstrap = None
    else:
        cfg.bootstrap = BootstrapConfig(
            replicates=replicates,
            ci_level=args.ci if args.ci is not None else b.ci_level,
            vote_threshold=args.vote_threshold if args.vote_threshold is not None else b.vote_threshold,
            seed=args.seed if args.seed is not None else b.seed,
            resample=args.resample or b.resample,
        )
    return cfg


def _add_analysis_args(p):
    p.add_argument("--input", help="CSV file with a header row")
    p.add_argument("--output", help="JSON report path")
    p.add_argument("--csv-output", help="flat pairwise CSV (default: output with .csv suffix)")
    p.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    p.add_argument("--threshold-q", type=float, help="marginal quantile level")
    p.add_argument("--transform", choices=["rank", "gpfit"])
    p.add_argument("--window", type=int, help="moving window length (odd)")
    p.add_argument("--aggregators", help="per-column aggregators, e.g. precip=sum,snow=mean")
    p.add_argument("--window-default", default="center", choices=["sum", "mean", "center"])
    p.add_argument("--bootstrap-n", type=int, help="bootstrap replicates (0 disables)")
    p.add_argument("--ci", type=float, help="confidence level")
    p.add_argument("--vote-threshold", type=float, help="source vote fraction required")
    p.add_argument("--resample", choices=["auto", "data", "events"])
    p.add_argument("--seed", type=int)
    p.add_argument("--group-col")
    p.add_argument("--time-col")
    p.add_argument("--columns", help="comma-separated numeric columns to analyze")
    p.add_argument("--zero-filter-cols", help="comma-separated columns for the zero filter")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tailcause", description="Extremal causal discovery on tabular data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("--generator", required=True,
                   help=f"one of: {', '.join(sorted(samplers.GENERATORS))}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", default=[])
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)

    for name, help_text in (
        ("score", "pairwise scores (bootstrap only with --bootstrap-n)"),
        ("pipeline", "full per-group analysis with bootstrap"),
        ("source-node", "majority-vote source node per group"),
    ):
        _add_analysis_args(sub.add_parser(name, help=help_text))
    return parser


def _summarize_sources(report, out):
    for g in report["groups"]:
        if "error" in g:
            print(f"{g['group']}: error: {g['error']['message']}", file=out)
            continue
        vote = g["source_vote"]
        winner = vote["winner_name"] if vote else g["column_names"][g["source_node"]]
        print(f"{g['group']}: source={winner if winner is not None else 'none'}", file=out)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            if args.generator not in samplers.GENERATORS:
                raise UsageError(
                    f"unknown generator {args.generator!r}; valid tags: "
                    f"{', '.join(sorted(samplers.GENERATORS))}"
                )
            simulate_cmd(args.generator, parse_params(args.param), args.n, args.seed, args.output)
            return EXIT_OK
        default_boot = {"score": 0, "pipeline": 300, "source-node": 300}[args.command]
        cfg = build_pipeline_config(args, default_boot)
        report = run_pipeline(cfg)
        if args.command == "source-node":
            _summarize_sources(report, sys.stdout)
        failed = [g for g in report["groups"] if "error" in g]
        if failed and len(failed) == len(report["groups"]):
            print(f"tailcause: every group failed: {failed[0]['error']['message']}", file=sys.stderr)
            return EXIT_DATA
        return EXIT_OK
    except Exception as exc:  # mapped to exit codes below; unknown errors re-raise
        code = exit_code_for(exc)
        print(f"tailcause: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
