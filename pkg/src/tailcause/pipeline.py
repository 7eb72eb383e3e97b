"""End-to-end analysis of tabular data, one group (e.g. catchment) at a time.

Per group: moving-window aggregation, zero filtering, extreme-event
selection, standardization, scores, bootstrap intervals and the source vote.
Results go to a versioned JSON report and a flat CSV of pairwise scores.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, InsufficientDataError, ParameterError, TailCauseError
from .inference import BootstrapConfig, bootstrap_w1, scores_from_w1, vote_from_w1
from .margins import SampleMatrix, ThresholdSpec, to_standard_pareto
from .score import SOURCE_CONVENTION, causal_report

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
AGGREGATORS = ("sum", "mean", "center")
FLAT_FIELDS = (
    "group", "cause", "effect", "score", "ci_lo", "ci_hi", "significant",
    "w1_cause", "w1_effect", "n_events",
)


# --- ingestion ------------------------------------------------------------

@dataclass
class CsvData:
    matrix: SampleMatrix
    groups: Optional[list] = None
    times: Optional[list] = None

    def by_group(self) -> dict:
        """Per-group matrices keyed by group id (sorted), row order preserved."""
        if self.groups is None:
            return {"all": self.matrix}
        labels = np.asarray(self.groups)
        return {
            g: self.matrix.take(np.flatnonzero(labels == g))
            for g in sorted(set(self.groups))
        }


def ingest_csv(path, group_col: Optional[str] = None, time_col: Optional[str] = None,
               columns: Optional[list] = None) -> CsvData:
    """Read a comma-separated UTF-8 file with a header row.

    Every column other than ``group_col`` and ``time_col`` must be numeric
    (``columns`` restricts the numeric set).  Errors name the 1-based data row
    and column of the offending cell.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        for col in (group_col, time_col):
            if col is not None and col not in header:
                raise DataError(f"column {col!r} not found in header of {path}")
        special = {group_col, time_col}
        if columns is None:
            numeric = [h for h in header if h not in special]
        else:
            missing = [c for c in columns if c not in header]
            if missing:
                raise DataError(f"columns {missing} not found in header of {path}")
            numeric = list(columns)
        num_idx = [header.index(c) for c in numeric]
        rows, groups, times = [], [], []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"row {r} has {len(record)} fields, header has {len(header)}"
                )
            vals = []
            for k in num_idx:
                cell = record[k].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"non-numeric value {cell!r} at row {r}, column {k + 1} ({header[k]!r})"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite value {cell!r} at row {r}, column {k + 1}")
                vals.append(v)
            rows.append(vals)
            if group_col is not None:
                groups.append(record[header.index(group_col)].strip())
            if time_col is not None:
                times.append(record[header.index(time_col)].strip())
    if not rows:
        raise DataError(f"{path} has no data rows")
    return CsvData(
        SampleMatrix(np.array(rows), tuple(numeric)),
        groups if group_col is not None else None,
        times if time_col is not None else None,
    )


# --- windows --------------------------------------------------------------

@dataclass(frozen=True)
class WindowConfig:
    """Moving windows; ``aggregators`` maps column name to sum/mean/center."""

    length: int = 3
    aggregators: dict = field(default_factory=dict)
    default: str = "center"
    stride: int = 1

    def __post_init__(self):
        if self.length < 1 or self.length % 2 == 0:
            raise ParameterError(f"window length must be odd and >= 1, got {self.length}")
        if self.stride < 1:
            raise ParameterError("window stride must be >= 1")
        for agg in list(self.aggregators.values()) + [self.default]:
            if agg not in AGGREGATORS:
                raise ParameterError(f"unknown aggregator {agg!r}; expected one of {AGGREGATORS}")


def apply_windows(data: SampleMatrix, cfg: WindowConfig) -> SampleMatrix:
    """Aggregate rows ``[t, t + length - 1]`` per column."""
    n, L = data.n, cfg.length
    if n < L:
        raise InsufficientDataError(f"{n} rows cannot fill a window of length {L}")
    unknown = set(cfg.aggregators) - set(data.column_names)
    if unknown:
        raise ParameterError(f"aggregators given for unknown columns {sorted(unknown)}")
    win = sliding_window_view(data.values, L, axis=0)[:: cfg.stride]
    out = np.empty(win.shape[:2])
    for j, name in enumerate(data.column_names):
        agg = cfg.aggregators.get(name, cfg.default)
        if agg == "sum":
            out[:, j] = win[:, j, :].sum(axis=1)
        elif agg == "mean":
            out[:, j] = win[:, j, :].mean(axis=1)
        else:
            out[:, j] = win[:, j, L // 2]
    return SampleMatrix(out, data.column_names)


def zero_filter(data: SampleMatrix, columns) -> tuple:
    """Drop all-zero listed columns, then rows where the other listed columns are all zero.

    Returns ``(filtered, excluded_columns)``.
    """
    columns = [c for c in columns if c in data.column_names]
    excluded = [c for c in columns if np.all(data.values[:, data.column_names.index(c)] == 0)]
    keep_cols = [c for c in data.column_names if c not in excluded]
    active = [c for c in columns if c not in excluded]
    if not keep_cols:
        raise InsufficientDataError("every column was excluded by the zero filter")
    values = data.values[:, [data.column_names.index(c) for c in keep_cols]]
    if active:
        idx = [keep_cols.index(c) for c in active]
        values = values[~np.all(values[:, idx] == 0, axis=1)]
    if values.shape[0] == 0:
        raise InsufficientDataError("no rows left after zero filtering")
    return SampleMatrix(values, tuple(keep_cols)), excluded


# --- pipeline -------------------------------------------------------------

@dataclass
class PipelineConfig:
    input: str
    output: str
    csv_output: Optional[str] = None
    group_col: Optional[str] = None
    time_col: Optional[str] = None
    columns: Optional[list] = None
    window: Optional[WindowConfig] = None
    threshold: ThresholdSpec = field(default_factory=lambda: ThresholdSpec(q=0.90))
    method: str = "rank"
    zero_filter_cols: tuple = ()
    bootstrap: Optional[BootstrapConfig] = field(
        default_factory=lambda: BootstrapConfig(replicates=300)
    )

    @property
    def flat_path(self) -> Path:
        if self.csv_output:
            return Path(self.csv_output)
        return Path(self.output).with_suffix(".csv")

    @classmethod
    def from_dict(cls, cfg: dict) -> "PipelineConfig":
        cfg = dict(cfg)
        try:
            if cfg.get("window") is not None:
                w = cfg["window"]
                cfg["window"] = WindowConfig(**w) if isinstance(w, dict) else WindowConfig(length=int(w))
            if "threshold" in cfg:
                t = cfg["threshold"]
                cfg["threshold"] = ThresholdSpec(**t) if isinstance(t, dict) else ThresholdSpec(q=float(t))
            if cfg.get("bootstrap") is not None:
                cfg["bootstrap"] = BootstrapConfig(**cfg["bootstrap"])
            if "zero_filter_cols" in cfg:
                cfg["zero_filter_cols"] = tuple(cfg["zero_filter_cols"])
            return cls(**cfg)
        except TypeError as exc:
            raise ParameterError(f"invalid pipeline configuration: {exc}") from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["flat_output"] = str(self.flat_path)
        return out


def group_seed(seed, group: str):
    """Per-group entropy: stable under adding or removing other groups."""
    base = 0 if seed is None else int(seed)
    return (base, zlib.crc32(group.encode("utf-8")))


def analyze_group(name: str, data: SampleMatrix, cfg: PipelineConfig) -> dict:
    """Run every stage for one group and return its report entry."""
    entry = {"group": name, "n_rows": data.n}
    notes = []
    if cfg.window is not None:
        data = apply_windows(data, cfg.window)
    entry["n_windowed"] = data.n
    excluded = []
    if cfg.zero_filter_cols:
        data, excluded = zero_filter(data, cfg.zero_filter_cols)
        for c in excluded:
            notes.append(f"column {c!r} is identically zero and was excluded")
    entry["excluded_columns"] = excluded
    entry["n_filtered"] = data.n
    if data.d < 2:
        raise InsufficientDataError("fewer than two columns left for causal analysis")

    x = to_standard_pareto(data, cfg.threshold, cfg.method)
    rep = causal_report(x)
    entry.update(rep.to_dict())
    entry["thresholds"] = cfg.threshold.resolve(data.values).tolist()
    entry["transform"] = x.method
    entry["fits"] = None if x.fits is None else [f.to_dict() for f in x.fits]
    entry["warnings"] = list(x.warnings)
    if cfg.bootstrap is not None:
        bcfg = BootstrapConfig(
            replicates=cfg.bootstrap.replicates,
            ci_level=cfg.bootstrap.ci_level,
            vote_threshold=cfg.bootstrap.vote_threshold,
            seed=group_seed(cfg.bootstrap.seed, name),
            resample=cfg.bootstrap.resample,
        )
        boot = bootstrap_w1(x, bcfg)
        entry["bootstrap"] = scores_from_w1(boot, bcfg.ci_level).to_dict()
        entry["source_vote"] = vote_from_w1(boot, bcfg.vote_threshold).to_dict(x.column_names)
    else:
        entry["bootstrap"] = None
        entry["source_vote"] = None
    entry["notes"] = notes + entry["notes"]
    return entry


def flat_rows(report: dict) -> list:
    rows = []
    for g in report["groups"]:
        if "error" in g:
            continue
        names, w1, s = g["column_names"], g["w1"], g["scores"]
        boot = g.get("bootstrap")
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                rows.append({
                    "group": g["group"],
                    "cause": names[i],
                    "effect": names[j],
                    "score": s[i][j],
                    "ci_lo": boot["lo"][i][j] if boot else "",
                    "ci_hi": boot["hi"][i][j] if boot else "",
                    "significant": int(boot["significant"][i][j]) if boot else "",
                    "w1_cause": w1[i],
                    "w1_effect": w1[j],
                    "n_events": g["n_events"],
                })
    return rows


def write_flat_csv(rows, path) -> None:
    # csv writes floats with repr, which round-trips exactly
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=FLAT_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_pipeline(cfg: PipelineConfig, write: bool = True) -> dict:
    """Analyze every group; failures are recorded per group and do not stop the run."""
    table = ingest_csv(cfg.input, cfg.group_col, cfg.time_col, cfg.columns)
    groups = []
    for name, data in table.by_group().items():
        try:
            groups.append(analyze_group(name, data, cfg))
        except TailCauseError as exc:
            logger.warning("group %s failed: %s", name, exc)
            groups.append({
                "group": name,
                "n_rows": data.n,
                "error": {"type": type(exc).__name__, "message": str(exc)},
            })
    report = {
        "schema_version": SCHEMA_VERSION,
        "source_convention": SOURCE_CONVENTION,
        "config": cfg.to_dict(),
        "groups": groups,
    }
    if write:
        write_json(report, cfg.output)
        write_flat_csv(flat_rows(report), cfg.flat_path)
    return report
