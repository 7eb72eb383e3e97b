"""Synthetic data generators.

* heavy-tailed structural equation models: additive linear (LSCM) and
  recursive max-linear (RMLM) over a DAG, with generalized Pareto noise;
* the bivariate asymmetric logistic extreme-value copula (Tawn);
* standard Pareto vectors ``X = E + U - max(U)`` from a latent ``U``, either
  given directly or obtained from a latent ``T`` by reweighting with
  ``exp(max(t))`` (Gumbel, log-gamma "Dirichlet" and Gaussian "Huesler-Reiss"
  latents).

All samplers take ``seed`` as an int, ``None`` or a ``numpy.random.Generator``
and are deterministic for a fixed integer seed.
"""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import HeavyWeightError, ParameterError
from .margins import StandardParetoMatrix


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --- univariate -----------------------------------------------------------

def sample_gp_univariate(sigma: float, xi: float, n: int, seed=None) -> np.ndarray:
    """Inverse-CDF draws from GP(sigma, xi): ``sigma * (u**-xi - 1) / xi``."""
    if sigma <= 0:
        raise ParameterError("GP scale must be positive")
    u = _rng(seed).uniform(size=n)
    if xi == 0:
        return -sigma * np.log(u)
    return sigma * np.expm1(-xi * np.log(u)) / xi


def positive_stable(alpha: float, n: int, seed=None) -> np.ndarray:
    """Positive ``alpha``-stable draws with Laplace transform ``exp(-t**alpha)``.

    Chambers-Mallows-Stuck (Kanter) form; ``alpha = 1`` is the point mass at 1.
    """
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"stable index must be in (0, 1], got {alpha}")
    if alpha == 1.0:
        return np.ones(n)
    rng = _rng(seed)
    theta = rng.uniform(0.0, np.pi, size=n)
    w = rng.exponential(size=n)
    return (
        np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * theta) / w) ** ((1.0 - alpha) / alpha)
    )


# --- structural equation models ------------------------------------------

SEM_KINDS = ("lscm", "rmlm")


@dataclass(frozen=True)
class SemSpec:
    """Heavy-tailed SEM over a DAG.

    ``weights[j, k]`` is the effect of parent ``k`` on child ``j`` (zero = no
    edge).  For ``rmlm`` the innovation weights ``c_jj`` are ``self_weights``
    (default all ones) and every edge weight must be strictly positive.
    """

    kind: str
    weights: np.ndarray
    xi: float = 0.1
    self_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ParameterError("SEM weights must be a square matrix")
        if self.kind not in SEM_KINDS:
            raise ParameterError(f"unknown SEM kind {self.kind!r}; expected one of {SEM_KINDS}")
        if self.xi <= 0:
            raise ParameterError("noise shape xi must be positive")
        if np.any(np.diag(w) != 0):
            raise ParameterError("self-loops are not allowed in the DAG")
        if self.kind == "rmlm" and np.any(w < 0):
            raise ParameterError("max-linear edge weights must be strictly positive")
        object.__setattr__(self, "weights", w)
        if self.self_weights is not None:
            c = np.array(self.self_weights, dtype=float)
            if c.shape != (w.shape[0],) or np.any(c <= 0):
                raise ParameterError("innovation weights must be d positive numbers")
            object.__setattr__(self, "self_weights", c)
        self.order()

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.weights[j])

    def order(self) -> list:
        ts = graphlib.TopologicalSorter(
            {j: set(self.parents(j).tolist()) for j in range(self.d)}
        )
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            raise ParameterError(f"SEM graph is cyclic: {exc.args[1]}") from None


def gp_noise(xi: float, size, seed=None) -> np.ndarray:
    """Innovations with survival ``(1 + xi z)**(-1/xi)`` on ``z >= 0``."""
    u = _rng(seed).uniform(size=size)
    return np.expm1(-xi * np.log(u)) / xi


def sample_sem(spec: SemSpec, n: int, seed=None, noise: Optional[np.ndarray] = None) -> np.ndarray:
    """Draw ``n`` rows from the SEM, generating nodes in topological order.

    ``noise`` replaces the random innovations (shape ``(n, d)``) when given.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if noise is None:
        eps = gp_noise(spec.xi, (n, spec.d), seed)
    else:
        eps = np.broadcast_to(np.asarray(noise, dtype=float), (n, spec.d))
    c = spec.self_weights if spec.self_weights is not None else np.ones(spec.d)
    y = np.zeros((n, spec.d))
    for j in spec.order():
        pa = spec.parents(j)
        if spec.kind == "lscm":
            y[:, j] = y[:, pa] @ spec.weights[j, pa] + eps[:, j]
        else:
            y[:, j] = c[j] * eps[:, j]
            if pa.size:
                y[:, j] = np.maximum(y[:, j], (y[:, pa] * spec.weights[j, pa]).max(axis=1))
    return y


def pair_sem(kind: str, beta: float, xi: float = 0.1) -> SemSpec:
    """``Y1 = e1``; ``Y2 = beta*Y1 + e2`` (lscm) or ``max(beta*Y1, e2)`` (rmlm)."""
    w = np.zeros((2, 2))
    w[1, 0] = beta
    return SemSpec(kind, w, xi)


def confounder_sem(beta: float, xi: float = 0.1, gamma: Optional[float] = None) -> SemSpec:
    """Linear confounder design ``Y1 -> Y2``, ``Y1 -> Y3``, plus ``Y2 -> Y3`` if ``gamma``."""
    w = np.zeros((3, 3))
    w[1, 0] = beta
    w[2, 0] = beta
    if gamma is not None:
        w[2, 1] = gamma
    return SemSpec("lscm", w, xi)


def draw_gamma(seed=None) -> float:
    """Random direct-link coefficient, uniform on [0.1, 3]."""
    return float(_rng(seed).uniform(0.1, 3.0))


# --- asymmetric logistic copula ------------------------------------------

@dataclass(frozen=True)
class CopulaSpec:
    alpha: float
    beta1: float = 1.0
    beta2: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"dependence alpha must be in (0, 1], got {self.alpha}")
        for b in (self.beta1, self.beta2):
            if not (0.0 <= b <= 1.0):
                raise ParameterError(f"asymmetry parameters must be in [0, 1], got {b}")


def asym_logistic_cdf(u, v, spec: CopulaSpec):
    """Closed-form Tawn copula ``C(u, v)``."""
    lu, lv = np.log(u), np.log(v)
    a = spec.alpha
    inner = (-spec.beta1 * lu) ** (1.0 / a) + (-spec.beta2 * lv) ** (1.0 / a)
    return np.exp(-inner ** a + (1.0 - spec.beta1) * lu + (1.0 - spec.beta2) * lv)


def sample_asym_logistic(spec: CopulaSpec, n: int, seed=None, frechet: bool = False) -> np.ndarray:
    """Bivariate draws from the asymmetric logistic copula (uniform margins).

    On the unit Frechet scale ``Y_j = max(beta_j * A_j, (1 - beta_j) * B_j)``
    with ``A = (S / E)**alpha`` logistic, ``S`` positive stable and ``B``
    independent unit Frechet.  Set ``frechet=True`` to get ``Y`` itself.
    """
    rng = _rng(seed)
    s = positive_stable(spec.alpha, n, rng)
    a = (s[:, None] / rng.exponential(size=(n, 2))) ** spec.alpha
    b = 1.0 / rng.exponential(size=(n, 2))
    beta = np.array([spec.beta1, spec.beta2])
    y = np.maximum(beta * a, (1.0 - beta) * b)
    if frechet:
        return y
    return np.exp(-1.0 / y)


# --- standard Pareto vectors ---------------------------------------------

def standard_pareto_from_latent(u, e) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return e[:, None] + (u - u.max(axis=1, keepdims=True))


def sample_standard_pareto_u(latent, n: int, seed=None, return_exponential: bool = False):
    """Rows ``X = E + U - max(U)`` with ``E ~ Exp(1)`` independent of ``U``.

    ``latent`` is either an ``(n, d)`` array of ``U`` draws or a callable
    ``latent(rng, n) -> (n, d)``.  The row maximum of ``X`` equals ``E``
    exactly.
    """
    rng = _rng(seed)
    u = latent(rng, n) if callable(latent) else np.asarray(latent, dtype=float)
    if u.ndim != 2 or u.shape[0] != n:
        raise ParameterError(f"latent draws must have shape ({n}, d), got {u.shape}")
    e = rng.exponential(size=n)
    x = StandardParetoMatrix.from_array(standard_pareto_from_latent(u, e))
    return (x, e) if return_exponential else x


LATENTS = ("gumbel", "dirichlet", "hr", "normal")


@dataclass(frozen=True)
class MgpSpec:
    """Latent law for a standard Pareto construction.

    ``params`` by latent:

    * ``gumbel``: ``alpha`` (> 1 for the T-representation) and ``d``;
    * ``dirichlet``: ``alphas`` (all > 0);
    * ``hr``: ``mean`` and ``cov`` (positive definite);
    * ``normal``: ``mean`` and ``cov``, U-representation only.
    """

    latent: str
    params: dict = field(default_factory=dict)
    representation: str = "t_rep"
    pool_factor: int = 20

    def __post_init__(self):
        if self.latent not in LATENTS:
            raise ParameterError(f"unknown latent {self.latent!r}; expected one of {LATENTS}")
        if self.representation not in ("u_rep", "t_rep"):
            raise ParameterError("representation must be 'u_rep' or 't_rep'")
        if self.pool_factor < 1:
            raise ParameterError("pool_factor must be at least 1")
        p = self.params
        if self.latent == "gumbel":
            if p.get("alpha", 0) <= 0:
                raise ParameterError("Gumbel latent needs alpha > 0")
            if self.representation == "t_rep" and p["alpha"] <= 1:
                raise ParameterError("T-representation needs E[exp(T)] finite: Gumbel alpha > 1")
        elif self.latent == "dirichlet":
            if np.any(np.asarray(p.get("alphas", [0])) <= 0):
                raise ParameterError("Dirichlet latent needs all alphas > 0")
        else:
            cov = np.asarray(p["cov"], dtype=float)
            if np.any(np.linalg.eigvalsh(cov) <= 0):
                raise ParameterError("covariance must be positive definite")
            if self.latent == "normal" and self.representation == "t_rep":
                raise ParameterError("normal latent is for the U-representation; use 'hr'")

    @property
    def d(self) -> int:
        p = self.params
        if self.latent == "gumbel":
            return int(p.get("d", 2))
        if self.latent == "dirichlet":
            return len(p["alphas"])
        return len(p["mean"])


def latent_draws(spec: MgpSpec, n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    p = spec.params
    if spec.latent == "gumbel":
        # P(W <= w) = exp(-exp(-alpha w))
        return -np.log(rng.exponential(size=(n, spec.d))) / p["alpha"]
    if spec.latent == "dirichlet":
        alphas = np.asarray(p["alphas"], dtype=float)
        return np.log(rng.gamma(alphas, 1.0, size=(n, alphas.size)))
    return rng.multivariate_normal(np.asarray(p["mean"], float), np.asarray(p["cov"], float), size=n)


def effective_sample_size(log_weights) -> float:
    w = np.exp(log_weights - np.max(log_weights))
    w /= w.sum()
    return float(1.0 / np.sum(w * w))


def sample_standard_pareto_t(spec: MgpSpec, n: int, seed=None, return_exponential: bool = False):
    """Standard Pareto draws whose density is the T-representation of ``spec``.

    The U-density ``exp(max u) f_T(u)`` is reached by self-normalized
    importance resampling of a pool of ``pool_factor * n`` latent draws.
    ``spec.representation == 'u_rep'`` skips the reweighting and uses the
    latent directly as ``U``.
    """
    rng = _rng(seed)
    if spec.representation == "u_rep":
        return sample_standard_pareto_u(lambda r, k: latent_draws(spec, k, r), n, rng,
                                        return_exponential)
    pool = latent_draws(spec, spec.pool_factor * n, rng)
    logw = pool.max(axis=1)
    ess = effective_sample_size(logw)
    if ess < n / 10.0:
        raise HeavyWeightError(
            f"effective sample size {ess:.0f} < n/10 = {n / 10:.0f}; "
            "increase pool_factor (or the Gumbel alpha)"
        )
    w = np.exp(logw - logw.max())
    idx = rng.choice(pool.shape[0], size=n, replace=True, p=w / w.sum())
    return sample_standard_pareto_u(pool[idx], n, rng, return_exponential)


# --- generator registry (used by the CLI) --------------------------------

def _gen_pair(kind):
    def gen(params, n, rng):
        spec = pair_sem(kind, float(params.get("beta", 1.0)), float(params.get("xi", 0.1)))
        return sample_sem(spec, n, rng), ["Y1", "Y2"]
    return gen


def _gen_confounder(params, n, rng):
    gamma = params.get("gamma")
    if params.get("direct_link") and gamma is None:
        gamma = draw_gamma(rng)
    spec = confounder_sem(float(params.get("beta", 1.0)), float(params.get("xi", 0.1)),
                          None if gamma is None else float(gamma))
    return sample_sem(spec, n, rng), ["Y1", "Y2", "Y3"]


def _gen_alog(params, n, rng):
    spec = CopulaSpec(float(params.get("alpha", 0.3)), float(params.get("beta1", 1.0)),
                      float(params.get("beta2", 1.0)))
    return sample_asym_logistic(spec, n, rng), ["U1", "U2"]


def _gen_mgp(params, n, rng):
    params = dict(params)
    latent = params.pop("latent", "gumbel")
    rep = params.pop("representation", "t_rep")
    pool = int(params.pop("pool_factor", 20))
    if latent == "gumbel":
        params = {"alpha": float(params.get("alpha", 2.0)), "d": int(params.get("d", 2))}
    elif latent == "dirichlet":
        params = {"alphas": [float(a) for a in params.get("alphas", [1.0, 1.0])]}
    else:
        d = int(params.get("d", 2))
        params = {"mean": params.get("mean", [0.0] * d), "cov": params.get("cov", np.eye(d).tolist())}
    spec = MgpSpec(latent, params, rep, pool)
    x = sample_standard_pareto_t(spec, n, rng)
    return x.values, [f"X{j + 1}" for j in range(x.d)]


GENERATORS: dict = {
    "lscm": _gen_pair("lscm"),
    "rmlm": _gen_pair("rmlm"),
    "confounder": _gen_confounder,
    "alog": _gen_alog,
    "mgp": _gen_mgp,
}


def simulate(tag: str, params: dict, n: int, seed=None):
    """Run a registered generator; returns ``(values, column_names)``."""
    try:
        gen: Callable = GENERATORS[tag]
    except KeyError:
        raise ParameterError(
            f"unknown generator {tag!r}; valid tags: {', '.join(sorted(GENERATORS))}"
        ) from None
    return gen(params, n, _rng(seed))
