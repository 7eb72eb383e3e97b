"""Wasserstein distances to the unit exponential and the extremal causal score.

For a standard Pareto vector every margin is stochastically smaller than the
unit exponential ``E``.  The cause of an extremal relation takes large negative
values more often (its partner is extreme while it is not), so its margin sits
farther from ``E``.  The score

    s[i, j] = (W1(X_i, E) - W1(X_j, E)) / max_k W1(X_k, E)

is therefore positive when ``i`` is the extremal cause of ``j``, and the margin
with the largest distance is the source of the extremal topological order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, NonIdentifiableError, ParameterError
from .margins import StandardParetoMatrix

NON_IDENTIFIABLE_W1 = 1e-3
DEFAULT_SCORE_FLOOR = 0.01
SOURCE_CONVENTION = "largest W1 distance to Exp(1) is the source (positive score = cause)"


def w1_to_unit_exponential(sample) -> float:
    """Exact ``integral |F_n(t) - F_E(t)| dt`` for the empirical CDF ``F_n``.

    The real line is cut at the sorted sample points and at 0.  On each piece
    ``F_n`` is a constant ``k/n``; left of 0 the integrand is ``k/n`` and right
    of 0 it is ``|k/n - 1 + exp(-t)|``, which changes sign at most once, at
    ``-log(1 - k/n)``.  Beyond ``max(x_(n), 0)`` the remaining mass is
    ``exp(-max(x_(n), 0))``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("W1 distance of an empty sample")
    if not np.all(np.isfinite(x)):
        raise ParameterError("sample contains NaN or infinite values")
    x = np.sort(x)
    n = x.size

    pts = np.sort(np.append(x, 0.0))
    a, b = pts[:-1], pts[1:]
    p = np.searchsorted(x, a, side="right") / n

    total = np.sum(np.where(b <= 0.0, p * (b - a), 0.0))

    pos = a >= 0.0
    a, b, p = a[pos], b[pos], p[pos]
    with np.errstate(divide="ignore"):
        cross = np.where(p < 1.0, -np.log1p(-p), np.inf)
    c = np.clip(cross, a, b)
    # integral of exp(-t) - (1 - p) over [lo, hi]
    def signed(lo, hi):
        return -np.expm1(-(hi - lo)) * np.exp(-lo) - (1.0 - p) * (hi - lo)

    total += np.sum(np.abs(signed(a, c)) + np.abs(signed(c, b)))
    return float(total + np.exp(-max(x[-1], 0.0)))


@dataclass(frozen=True)
class W1Vector:
    distances: np.ndarray
    sample_sizes: np.ndarray


def _values(x) -> np.ndarray:
    if isinstance(x, StandardParetoMatrix):
        return x.values
    values = np.asarray(x, dtype=float)
    if values.ndim != 2:
        raise ParameterError("expected an (m, d) matrix of events")
    return values


def w1_distances(x) -> W1Vector:
    values = _values(x)
    dist = np.array([w1_to_unit_exponential(values[:, j]) for j in range(values.shape[1])])
    return W1Vector(dist, np.full(values.shape[1], values.shape[0]))


def score_matrix_from_w1(w1) -> np.ndarray:
    """Pairwise scores from a vector of distances; raises if all are zero."""
    w1 = np.asarray(w1, dtype=float)
    top = w1.max()
    if top <= 0.0:
        raise NonIdentifiableError("every margin is at zero W1 distance from Exp(1)")
    return (w1[:, None] - w1[None, :]) / top


def _check_pair(values, i, j):
    d = values.shape[1]
    if i == j:
        raise ParameterError("causal score needs two distinct margins")
    if not (0 <= i < d and 0 <= j < d):
        raise ParameterError(f"margin indices ({i}, {j}) out of range for d={d}")
    if values.shape[0] < 2:
        raise InsufficientDataError("causal score needs at least 2 events")


def causal_score(x, i: int, j: int) -> float:
    """Score ``s[i -> j]``; positive means ``i`` is the extremal cause of ``j``.

    The normalizing maximum runs over all columns of ``x``.
    """
    values = _values(x)
    _check_pair(values, i, j)
    w1 = w1_distances(values).distances
    return float(score_matrix_from_w1(w1)[i, j])


def mean_gap(x, i: int, j: int) -> float:
    """``mean(X_j) - mean(X_i)``: same sign as ``W1(X_i) - W1(X_j)`` in the population."""
    values = _values(x)
    _check_pair(values, i, j)
    return float(values[:, j].mean() - values[:, i].mean())


def _order_from_w1(w1):
    # stable sort on -w1: equal distances keep the lower index first
    order = np.argsort(-np.asarray(w1), kind="stable")
    source = int(order[0])
    tie = bool(len(w1) > 1 and np.isclose(w1[order[0]], w1[order[1]], rtol=0.0, atol=1e-12))
    return order, source, tie


def rank_margins(x):
    """Extremal topological order and source node.

    Returns
    -------
    order : ndarray of int
        Margin indices by decreasing W1 distance (most cause-like first).
    source : int
        ``order[0]``.
    tie : bool
        True when the two largest distances coincide; the lower index wins.
    """
    values = _values(x)
    if values.shape[1] < 2:
        raise ParameterError("ranking needs at least two margins")
    return _order_from_w1(w1_distances(values).distances)


@dataclass
class CausalScoreReport:
    scores: np.ndarray
    w1: W1Vector
    topological_order: np.ndarray
    source_node: int
    tie: bool
    non_identifiable: bool
    column_names: tuple = ()
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "w1": self.w1.distances.tolist(),
            "n_events": int(self.w1.sample_sizes[0]),
            "scores": self.scores.tolist(),
            "topological_order": [int(k) for k in self.topological_order],
            "source_node": int(self.source_node),
            "source_tie": self.tie,
            "non_identifiable": self.non_identifiable,
            "source_convention": SOURCE_CONVENTION,
            "notes": list(self.notes),
        }


def causal_report(x, score_floor: float = DEFAULT_SCORE_FLOOR) -> CausalScoreReport:
    """All pairwise scores, distances and the source node for an event matrix.

    Degenerate inputs are flagged rather than raised: if the largest distance
    is below 1e-3, or every off-diagonal score is below ``score_floor`` in
    absolute value, ``non_identifiable`` is set.
    """
    values = _values(x)
    if values.shape[1] < 2:
        raise ParameterError("causal analysis needs at least two margins")
    if values.shape[0] < 2:
        raise InsufficientDataError("causal analysis needs at least 2 events")
    names = getattr(x, "column_names", None) or tuple(f"X{j + 1}" for j in range(values.shape[1]))
    w1 = w1_distances(values)
    notes = []
    if w1.distances.max() <= 0.0:
        scores = np.zeros((values.shape[1],) * 2)
    else:
        scores = score_matrix_from_w1(w1.distances)
    off = scores[~np.eye(values.shape[1], dtype=bool)]
    non_id = bool(w1.distances.max() < NON_IDENTIFIABLE_W1 or np.all(np.abs(off) < score_floor))
    if non_id:
        notes.append("non-identifiable: distances or scores below the identifiability floor")
    order, source, tie = _order_from_w1(w1.distances)
    if tie:
        notes.append("source tie broken by lower index")
    return CausalScoreReport(scores, w1, order, source, tie, non_id, tuple(names), notes)
