"""Extreme-event selection, generalized Pareto margins and the standard Pareto scale.

A multivariate extreme event is a row where at least one component exceeds
its marginal threshold.  Event rows are mapped margin by margin to the
standard Pareto scale (unit scale, zero shape), where the positive part of
every column is unit exponential.  Two routes are offered:

``rank``
    Empirical probability integral transform over the full sample, then the
    exponential quantile function, shifted so that zero sits at the threshold.
``gp_fit``
    Maximum-likelihood generalized Pareto fit of the positive exceedances and
    the inverse of ``sigma * (exp(xi * x) - 1) / xi``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import (
    FitError,
    InsufficientDataError,
    NoExtremeEventsError,
    ParameterError,
)

logger = logging.getLogger(__name__)

MIN_RELIABLE_EXCEEDANCES = 30
XI_BOUNDS = (-0.5, 1.0)
CLAMP_FLOOR = 1e-6
TIE_FRACTION = 0.5
METHODS = ("rank", "gp_fit")


@dataclass(frozen=True)
class SampleMatrix:
    """``n x d`` block of finite observations with column labels."""

    values: np.ndarray
    column_names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ParameterError(f"expected a 2-d matrix, got shape {values.shape}")
        if values.shape[0] < 1:
            raise InsufficientDataError("sample matrix has no rows")
        if not np.all(np.isfinite(values)):
            raise ParameterError("sample matrix contains NaN or infinite values")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != values.shape[1]:
            raise ParameterError(
                f"{len(names)} column names for {values.shape[1]} columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def take(self, rows) -> "SampleMatrix":
        return SampleMatrix(self.values[np.asarray(rows)], self.column_names)

    def select(self, columns: Sequence[str]) -> "SampleMatrix":
        idx = [self.column_names.index(c) for c in columns]
        return SampleMatrix(self.values[:, idx], tuple(columns))


def as_sample_matrix(data, column_names: Optional[Sequence[str]] = None) -> SampleMatrix:
    """Wrap an array (or pass through a :class:`SampleMatrix`)."""
    if isinstance(data, SampleMatrix):
        return data
    values = np.asarray(data, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if column_names is None:
        column_names = [f"X{j + 1}" for j in range(values.shape[1])]
    return SampleMatrix(values, tuple(column_names))


@dataclass(frozen=True)
class ThresholdSpec:
    """Marginal thresholds: empirical ``q``-quantiles unless given explicitly."""

    q: float = 0.95
    thresholds: Optional[tuple] = None

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ParameterError(f"quantile level must lie in (0, 1), got {self.q}")
        if self.thresholds is not None:
            object.__setattr__(
                self, "thresholds", tuple(float(t) for t in self.thresholds)
            )

    def resolve(self, values: np.ndarray) -> np.ndarray:
        if self.thresholds is not None:
            u = np.asarray(self.thresholds, dtype=float)
            if u.shape != (values.shape[1],):
                raise ParameterError(
                    f"{u.size} thresholds given for {values.shape[1]} columns"
                )
            return u
        return sorted_quantile(np.sort(values, axis=0), self.q)


def sorted_quantile(sorted_values: np.ndarray, q: float) -> np.ndarray:
    """Linear-interpolation quantile of each column of a column-sorted array."""
    n = sorted_values.shape[0]
    h = (n - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    a, b = sorted_values[lo], sorted_values[hi]
    return a + frac * (b - a)


@dataclass(frozen=True)
class GpMarginFit:
    sigma: float
    xi: float
    threshold: float
    n_exceed: int
    loglik: float = float("nan")

    @property
    def reliable(self) -> bool:
        return self.n_exceed >= MIN_RELIABLE_EXCEEDANCES

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "xi": self.xi,
            "threshold": self.threshold,
            "n_exceed": self.n_exceed,
            "loglik": self.loglik,
            "reliable": self.reliable,
        }


@dataclass
class StandardParetoMatrix:
    """Extreme events on the standard Pareto scale.

    ``source`` and ``threshold`` record how the matrix was produced so that
    resampling procedures can rerun the whole standardization on resampled raw
    data.  Matrices drawn directly from a generator leave them as ``None``.
    """

    values: np.ndarray
    event_indices: np.ndarray
    column_names: tuple
    method: str = "rank"
    fits: Optional[list] = None
    warnings: list = field(default_factory=list)
    clamped: Optional[np.ndarray] = None
    source: Optional[SampleMatrix] = None
    threshold: Optional[ThresholdSpec] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ParameterError("standard Pareto matrix must be 2-d")
        self.event_indices = np.asarray(self.event_indices, dtype=np.int64)
        self.column_names = tuple(self.column_names)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, column_names=None, method="generator"):
        values = np.asarray(values, dtype=float)
        if column_names is None:
            column_names = [f"X{j + 1}" for j in range(values.shape[1])]
        return cls(values, np.arange(values.shape[0]), tuple(column_names), method=method)


def select_extreme_events(data, spec: ThresholdSpec):
    """Rows where ``Y`` is not componentwise below ``u``, shifted by ``u``.

    Returns
    -------
    exceedances : SampleMatrix
        ``Z = Y - u`` for the event rows.
    event_indices : ndarray of int
        Row indices of the events in ``data``.
    """
    data = as_sample_matrix(data)
    u = spec.resolve(data.values)
    mask = np.any(data.values > u, axis=1)
    if not mask.any():
        raise NoExtremeEventsError("no extreme events: every row is below the thresholds")
    idx = np.flatnonzero(mask)
    return SampleMatrix(data.values[idx] - u, data.column_names), idx


def gp_negloglik(params, z):
    """Negative GP log-likelihood at ``(sigma, xi)`` for exceedances ``z > 0``."""
    sigma, xi = params
    if sigma <= 0:
        return np.inf
    if abs(xi) < 1e-12:
        return z.size * np.log(sigma) + z.sum() / sigma
    arg = xi * z / sigma
    if np.any(arg <= -1.0):
        return np.inf
    return z.size * np.log(sigma) + (1.0 + 1.0 / xi) * np.log1p(arg).sum()


def _pwm_start(z):
    # Hosking & Wallis probability-weighted moments.
    z = np.sort(z)
    n = z.size
    p = (np.arange(1, n + 1) - 0.35) / n
    a0 = z.mean()
    a1 = np.mean((1.0 - p) * z)
    denom = a0 - 2.0 * a1
    if denom <= 0:
        return max(a0, 1e-8), 0.0
    k = a0 / denom - 2.0
    sigma = 2.0 * a0 * a1 / denom
    xi = float(np.clip(-k, XI_BOUNDS[0] + 0.05, XI_BOUNDS[1] - 0.05))
    if xi < 0:
        # keep the start inside the support
        sigma = max(sigma, -xi * z[-1] * 1.01)
    return max(sigma, 1e-8), xi


def fit_gp_margin(exceedances, threshold: float = 0.0) -> GpMarginFit:
    """Maximum-likelihood GP fit with the shape restricted to (-0.5, 1).

    Parameters
    ----------
    exceedances : array_like
        Positive excesses ``Y - u`` of one margin.
    threshold : float
        Threshold ``u`` recorded on the result.

    Raises
    ------
    InsufficientDataError
        Fewer than two exceedances.
    FitError
        The optimizer did not converge or ended at a non-finite likelihood.
    """
    z = np.asarray(exceedances, dtype=float).ravel()
    if z.size < 2:
        raise InsufficientDataError(f"need at least 2 exceedances, got {z.size}")
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise ParameterError("exceedances must be finite and strictly positive")

    sigma0, xi0 = _pwm_start(z)
    scale = np.median(z) or 1.0

    # optimize over (log sigma, xi); the log keeps sigma positive
    def objective(theta):
        return gp_negloglik((np.exp(theta[0]) * scale, theta[1]), z) / z.size

    eps = 1e-9
    res = optimize.minimize(
        objective,
        x0=[np.log(sigma0 / scale), xi0],
        method="Nelder-Mead",
        bounds=[(None, None), (XI_BOUNDS[0] + eps, XI_BOUNDS[1] - eps)],
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000},
    )
    sigma = float(np.exp(res.x[0]) * scale)
    xi = float(res.x[1])
    nll = gp_negloglik((sigma, xi), z)
    if not res.success or not np.isfinite(nll):
        raise FitError(
            "generalized Pareto fit did not converge",
            diagnostics={
                "message": str(res.message),
                "nit": int(res.nit),
                "start": (sigma0, xi0),
                "n": int(z.size),
            },
        )
    return GpMarginFit(sigma=sigma, xi=xi, threshold=float(threshold),
                       n_exceed=int(z.size), loglik=float(-nll))


def gp_to_standard(z, sigma: float, xi: float, floor: float = CLAMP_FLOOR):
    """Map excesses ``z`` to the standard Pareto scale.

    Returns the transformed values and a mask of entries that fell outside the
    GP support and were clamped to ``log(floor) / xi``.
    """
    z = np.asarray(z, dtype=float)
    if abs(xi) < 1e-12:
        return z / sigma, np.zeros(z.shape, dtype=bool)
    arg = 1.0 + xi * z / sigma
    clamped = arg <= 0
    arg = np.where(clamped, floor, arg)
    return np.log(arg) / xi, clamped


def _rank_events(sorted_values, u, events):
    """Standard Pareto values of ``events`` rows from column-sorted data.

    Average ranks (ties share the mean position) over the full sample give
    ``F = rank / (n + 1)``; the exponential scale is shifted so that 0 sits
    between the last value ``<= u`` and the first ``> u``.
    """
    n = sorted_values.shape[0]
    out = np.empty(events.shape)
    for j in range(events.shape[1]):
        col = sorted_values[:, j]
        left = np.searchsorted(col, events[:, j], side="left")
        right = np.searchsorted(col, events[:, j], side="right")
        ranks = 0.5 * (left + right + 1)
        below = np.searchsorted(col, u[j], side="right")
        out[:, j] = np.log((n + 1.0 - below) / (n + 1.0 - ranks))
    return out


def _tie_warnings(values, names):
    out = []
    for j, name in enumerate(names):
        _, counts = np.unique(values[:, j], return_counts=True)
        share = counts.max() / values.shape[0]
        if share > TIE_FRACTION:
            out.append(
                f"column {name!r}: {share:.0%} identical values; rank transform is dominated by ties"
            )
    return out


def standardize_values(values: np.ndarray, spec: ThresholdSpec, method: str = "rank"):
    """Bare standardization of a raw ``(n, d)`` array.

    Returns ``(x, event_indices, fits, clamped)``; ``fits`` and ``clamped`` are
    ``None`` for the rank method.  Used directly by resampling loops, where the
    bookkeeping of :func:`to_standard_pareto` is not needed.
    """
    if method not in METHODS:
        raise ParameterError(f"unknown transform {method!r}; expected one of {METHODS}")
    if method == "rank":
        srt = np.sort(values, axis=0)
        if spec.thresholds is None:
            u = sorted_quantile(srt, spec.q)
        else:
            u = spec.resolve(values)
    else:
        u = spec.resolve(values)
    mask = np.any(values > u, axis=1)
    if not mask.any():
        raise NoExtremeEventsError("no extreme events: every row is below the thresholds")
    idx = np.flatnonzero(mask)
    if method == "rank":
        return _rank_events(srt, u, values[idx]), idx, None, None

    z = values[idx] - u
    fits = []
    x = np.empty_like(z)
    clamped = np.zeros(z.shape, dtype=bool)
    for j in range(values.shape[1]):
        fit = fit_gp_margin(z[z[:, j] > 0, j], threshold=u[j])
        fits.append(fit)
        x[:, j], clamped[:, j] = gp_to_standard(z[:, j], fit.sigma, fit.xi)
    return x, idx, fits, clamped


def to_standard_pareto(data, spec: ThresholdSpec, method: str = "rank") -> StandardParetoMatrix:
    """Select extreme events and put every margin on the standard Pareto scale.

    Every output row has at least one strictly positive component, and for
    each column the positive entries are exactly the rows above the threshold.
    """
    data = as_sample_matrix(data)
    x, idx, fits, clamped = standardize_values(data.values, spec, method)
    if method == "rank":
        warns = _tie_warnings(data.values, data.column_names)
    else:
        warns = []
        if clamped.any():
            warns.append(f"{int(clamped.sum())} entries below the GP support were clamped")
        for name, fit in zip(data.column_names, fits):
            if not fit.reliable:
                warns.append(f"column {name!r}: only {fit.n_exceed} exceedances for the GP fit")
    for w in warns:
        logger.warning(w)
    return StandardParetoMatrix(
        x, idx, data.column_names, method=method, fits=fits, warnings=warns,
        clamped=clamped, source=data, threshold=spec,
    )
