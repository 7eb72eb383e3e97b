"""Bootstrap confidence intervals and majority-vote source discovery.

Two resampling schemes are available:

``data``
    Resample rows of the raw sample, then redo threshold selection and the
    standardization.  The rank transform places each margin almost exactly on
    exponential quantiles, so only this scheme reproduces the sampling
    variability of the full estimator.
``events``
    Resample rows of the standardized event matrix.  Needed when no raw data
    is attached (e.g. matrices drawn straight from a generator); intervals are
    conservative for rank-standardized input.

``auto`` (the default) picks ``data`` whenever the matrix carries its source.
Whole rows are always resampled, never single columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientDataError, NonIdentifiableError, ParameterError, TailCauseError
from .margins import StandardParetoMatrix, standardize_values
from .score import _order_from_w1, score_matrix_from_w1, w1_to_unit_exponential

MIN_EVENTS = 10
RESAMPLE_MODES = ("auto", "data", "events")


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 500
    ci_level: float = 0.95
    vote_threshold: float = 0.95
    seed: Optional[int] = 0
    resample: str = "auto"

    def __post_init__(self):
        if self.replicates < 2:
            raise ParameterError("need at least 2 bootstrap replicates")
        if not (0.0 < self.ci_level < 1.0):
            raise ParameterError("ci_level must be in (0, 1)")
        if not (0.0 < self.vote_threshold <= 1.0):
            raise ParameterError("vote_threshold must be in (0, 1]")
        if self.resample not in RESAMPLE_MODES:
            raise ParameterError(f"resample must be one of {RESAMPLE_MODES}")


@dataclass(frozen=True)
class ScoreCI:
    point: float
    lo: float
    hi: float

    @property
    def significant(self) -> bool:
        return self.lo > 0.0 or self.hi < 0.0


@dataclass
class BootstrapW1:
    """Per-replicate W1 distances; ``nan`` rows mark failed replicates."""

    point: np.ndarray
    replicates: np.ndarray
    resample: str
    failures: int = 0


@dataclass
class BootstrapScores:
    point: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    replicates: np.ndarray
    ci_level: float
    resample: str
    failures: int = 0
    method: str = "percentile"

    @property
    def significant(self) -> np.ndarray:
        return (self.lo > 0.0) | (self.hi < 0.0)

    def __getitem__(self, ij) -> ScoreCI:
        i, j = ij
        return ScoreCI(float(self.point[i, j]), float(self.lo[i, j]), float(self.hi[i, j]))

    def to_dict(self) -> dict:
        return {
            "point": self.point.tolist(),
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "significant": self.significant.tolist(),
            "ci_level": self.ci_level,
            "interval": self.method,
            "resample": self.resample,
            "replicates": int(self.replicates.shape[0]),
            "failed_replicates": self.failures,
        }


@dataclass
class SourceVote:
    winner: Optional[int]
    fractions: np.ndarray
    threshold: float
    resample: str

    def to_dict(self, names=None) -> dict:
        out = {
            "winner": self.winner,
            "fractions": self.fractions.tolist(),
            "threshold": self.threshold,
            "resample": self.resample,
        }
        if names is not None:
            out["winner_name"] = None if self.winner is None else names[self.winner]
        return out


def _w1_row(values) -> np.ndarray:
    return np.array([w1_to_unit_exponential(values[:, j]) for j in range(values.shape[1])])


def _resolve_mode(x: StandardParetoMatrix, mode: str) -> str:
    has_source = x.source is not None and x.threshold is not None
    if mode == "auto":
        return "data" if has_source else "events"
    if mode == "data" and not has_source:
        raise ParameterError("data resampling needs a matrix built by to_standard_pareto")
    return mode


def bootstrap_w1(x, cfg: BootstrapConfig) -> BootstrapW1:
    """W1 distances of every margin for each bootstrap replicate.

    Replicate ``b`` draws from its own child of ``SeedSequence(cfg.seed)``, so
    results depend only on ``(data, cfg)`` and not on evaluation order.
    """
    if not isinstance(x, StandardParetoMatrix):
        x = StandardParetoMatrix.from_array(x)
    if x.m < MIN_EVENTS:
        raise InsufficientDataError(f"bootstrap needs at least {MIN_EVENTS} events, got {x.m}")
    mode = _resolve_mode(x, cfg.resample)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
    reps = np.full((cfg.replicates, x.d), np.nan)
    failures = 0
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        try:
            if mode == "data":
                raw = x.source.values
                rows = rng.integers(0, raw.shape[0], raw.shape[0])
                xb = standardize_values(raw[rows], x.threshold, x.method)[0]
            else:
                xb = x.values[rng.integers(0, x.m, x.m)]
            reps[b] = _w1_row(xb)
        except TailCauseError:
            failures += 1
    if failures == cfg.replicates:
        raise InsufficientDataError("every bootstrap replicate failed")
    return BootstrapW1(_w1_row(x.values), reps, mode, failures)


def scores_from_w1(boot: BootstrapW1, ci_level: float) -> BootstrapScores:
    d = boot.point.size
    point = score_matrix_from_w1(boot.point)
    reps = np.full((boot.replicates.shape[0], d, d), np.nan)
    for b, w in enumerate(boot.replicates):
        if np.all(np.isfinite(w)):
            try:
                reps[b] = score_matrix_from_w1(w)
            except NonIdentifiableError:
                pass
    tail = (1.0 - ci_level) / 2.0
    lo = np.nanquantile(reps, tail, axis=0)
    hi = np.nanquantile(reps, 1.0 - tail, axis=0)
    failures = int(np.sum(np.isnan(reps[:, 0, 0])))
    return BootstrapScores(point, lo, hi, reps, ci_level, boot.resample, failures)


def vote_from_w1(boot: BootstrapW1, threshold: float) -> SourceVote:
    d = boot.point.size
    ok = np.all(np.isfinite(boot.replicates), axis=1)
    sources = [_order_from_w1(w)[1] for w in boot.replicates[ok]]
    fractions = np.bincount(sources, minlength=d) / max(len(sources), 1)
    best = int(np.argmax(fractions))
    winner = best if fractions[best] >= threshold else None
    return SourceVote(winner, fractions, threshold, boot.resample)


def bootstrap_scores(x, cfg: BootstrapConfig) -> BootstrapScores:
    """Percentile intervals for every pairwise score.

    A score is significant when zero lies outside its interval.
    """
    return scores_from_w1(bootstrap_w1(x, cfg), cfg.ci_level)


def source_node_vote(x, cfg: BootstrapConfig) -> SourceVote:
    """Majority vote of the per-replicate source node.

    ``winner`` is ``None`` unless one node is the source in at least
    ``cfg.vote_threshold`` of the replicates.
    """
    return vote_from_w1(bootstrap_w1(x, cfg), cfg.vote_threshold)
