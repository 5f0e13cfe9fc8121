"""Method-of-moments fitting driver: reparameterisation, restarts and evaluation metrics.

Constraints are removed by reparameterising: weights are a softmax of free
logits and covariances are diag(d_j)**2 with d_j free.  In post-processing
mode the weights are held at 1/m and the means live in R^(n+1).
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import softmax

from . import moments
from .augment import augment_samples, postprocess_solution
from .bell import MAX_ORDER
from .debias import DebiasParams, fdeb
from .errors import NonFiniteObjectiveError
from .optim import lbfgs
from .params import GmmParams
from .sampling import as_samples, initial_params, make_rng

log = logging.getLogger(__name__)

Mode = Literal["moments", "debias"]
FitVariant = Literal["none", "implicit", "postprocess"]


@dataclass(frozen=True)
class FitConfig:
    d: int = 3
    restarts: int = 10
    max_iters: int = 1000
    grad_tol: float = 1e-7
    omega: float = 0.5
    variant: FitVariant = "postprocess"
    mode: Mode = "moments"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.d <= MAX_ORDER:
            raise ValueError(f"moment order must be in [1, {MAX_ORDER}], got {self.d}")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.variant not in ("none", "implicit", "postprocess"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.mode not in ("moments", "debias"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.variant != "none" and not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass
class Metrics:
    proportion_error: float
    mean_rel_error: float
    cov_rel_error: float
    cosine_angle: float
    flags: tuple[str, ...] = ()


@dataclass
class RestartResult:
    index: int
    params: GmmParams | None
    initial_objective: float
    final_objective: float
    iterations: int
    converged: bool
    message: str
    trace: list[float]
    runtime: float
    metrics: Metrics | None = None
    matching: np.ndarray | None = None


@dataclass
class FitReport:
    best_params: GmmParams
    best_index: int
    restarts: list[RestartResult]
    metrics: Metrics | None = None
    matching: np.ndarray | None = None
    runtime: float = 0.0
    config: FitConfig = field(default_factory=FitConfig)

    @property
    def objective_traces(self) -> list[list[float]]:
        return [r.trace for r in self.restarts]


def thread_count() -> int:
    """Worker cap from MOMGMM_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("MOMGMM_THREADS", "0").strip() or "0"
    value = int(raw)
    if value < 0:
        raise ValueError("MOMGMM_THREADS must be >= 0")
    return value or (os.cpu_count() or 1)


def _pad_cov(sigma: np.ndarray) -> np.ndarray:
    if sigma.ndim == 1:
        return np.append(sigma, 0.0)
    out = np.zeros((sigma.shape[0] + 1,) * 2)
    out[:-1, :-1] = sigma
    return out


class Problem:
    """Unconstrained objective for one (mode, variant) combination.

    ``fun(x)`` returns the value and gradient in internal coordinates;
    ``pack`` maps a starting GmmParams to internal coordinates and
    ``unpack`` maps internal coordinates back to a valid mixture.
    """

    def __init__(self, x, m: int, config: FitConfig, sigma=None):
        self.samples = as_samples(x)
        self.n, self.p = self.samples.n, self.samples.p
        self.m = m
        self.config = config
        self.sigma = None if sigma is None else np.asarray(sigma, dtype=float)
        if config.mode == "debias" and self.sigma is None:
            raise ValueError("debias mode needs the known covariance")
        self.post = config.variant == "postprocess"
        self.shift = config.omega**2 if config.variant == "implicit" else 0.0
        self.data = augment_samples(self.samples, config.omega) if self.post else self.samples
        self.na = self.n + 1 if self.post else self.n

    # layout: [logits (m) unless post] [means (na*m)] [stddevs (n*m), moments mode only]
    def _split(self, z):
        n, m, na = self.n, self.m, self.na
        off = 0
        if self.post:
            lam = np.full(m, 1.0 / m)
            logits = None
        else:
            logits = z[:m]
            lam = softmax(logits)
            off = m
        a = z[off : off + na * m].reshape(na, m)
        off += na * m
        dd = z[off : off + n * m].reshape(n, m) if self.config.mode == "moments" else None
        return lam, a, dd

    def pack(self, init: GmmParams) -> np.ndarray:
        parts = []
        if not self.post:
            parts.append(np.log(init.weights))
        a = init.means
        if self.post:
            a = np.vstack([a, np.full((1, self.m), self.config.omega)])
        parts.append(a.ravel())
        if self.config.mode == "moments":
            parts.append(init.stddevs.ravel())
        return np.concatenate(parts)

    def fun(self, z):
        lam, a, dd = self._split(z)
        d = self.config.d
        if self.config.mode == "moments":
            if self.post:
                dd = np.vstack([dd, np.zeros((1, self.m))])
            ev = moments.objective(GmmParams(lam, a, stddevs=dd), self.data, d, shift=self.shift)
            g_cov = ev.grad_cov[: self.n]
        else:
            sigma = _pad_cov(self.sigma) if self.post else self.sigma
            ev = fdeb(DebiasParams(lam, a, sigma), self.data, d, shift=self.shift)
            g_cov = None
        parts = []
        if not self.post:
            gw = ev.grad_weights
            parts.append(lam * (gw - lam @ gw))
        parts.append(ev.grad_means.ravel())
        if g_cov is not None:
            parts.append(g_cov.ravel())
        return ev.value, np.concatenate(parts)

    def unpack(self, z) -> GmmParams:
        lam, a, dd = self._split(z)
        m = self.m
        if self.config.mode == "moments":
            if self.post:
                relaxed = GmmParams(lam, a, stddevs=np.vstack([dd, np.zeros((1, m))]))
                return postprocess_solution(relaxed, self.config.omega, self.config.d)
            return GmmParams(lam, a, stddevs=np.abs(dd))
        if self.post:
            rescaled = postprocess_solution(GmmParams(lam, a, stddevs=np.zeros_like(a)), self.config.omega, self.config.d)
            lam, a = rescaled.weights, rescaled.means
        return DebiasParams(lam / lam.sum(), a, self.sigma).as_gmm()


def match_components(estimated_means, true_means):
    """Minimum-cost matching under cost ||mu_i - mu_j*||_2.

    Returns (order, cost) where ``order[j]`` is the estimated component
    assigned to true component j.
    """
    est = np.asarray(estimated_means, dtype=float)
    tru = np.asarray(true_means, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"size mismatch: {est.shape} vs {tru.shape}")
    cost = np.linalg.norm(est[:, :, None] - tru[:, None, :], axis=0)
    rows, cols = linear_sum_assignment(cost)
    order = np.empty_like(rows)
    order[cols] = rows
    return order, float(cost[rows, cols].sum())


def metrics(estimated: GmmParams, truth: GmmParams, order) -> Metrics:
    """Weight L1 error, average relative mean/covariance errors and mean cosine after matching."""
    est = estimated.permuted(order)
    flags = []
    prop = float(np.abs(est.weights - truth.weights).sum())
    mean_err, cov_err, cosines = [], [], []
    est_cov, true_cov = est.covariances(), truth.covariances()
    for j in range(truth.m):
        mu, mu_star = est.means[:, j], truth.means[:, j]
        ref = np.linalg.norm(mu_star)
        diff = np.linalg.norm(mu - mu_star)
        if ref == 0:
            flags.append(f"mean_abs_error[{j}]")
            mean_err.append(diff)
        else:
            mean_err.append(diff / ref)
        cref = np.linalg.norm(true_cov[j])
        cdiff = np.linalg.norm(est_cov[j] - true_cov[j])
        if cref == 0:
            flags.append(f"cov_abs_error[{j}]")
            cov_err.append(cdiff)
        else:
            cov_err.append(cdiff / cref)
        denom = np.linalg.norm(mu) * ref
        if denom == 0:
            flags.append(f"cosine_undefined[{j}]")
            cosines.append(0.0)
        else:
            cosines.append(float(mu @ mu_star) / denom)
    return Metrics(prop, float(np.mean(mean_err)), float(np.mean(cov_err)), float(np.mean(cosines)), tuple(flags))


def _run_restart(problem: Problem, index: int, truth: GmmParams | None) -> RestartResult:
    cfg = problem.config
    start = time.perf_counter()
    init = initial_params(problem.samples, problem.m, make_rng(cfg.seed, index))
    z0 = problem.pack(init)
    nan = float("nan")
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            res = lbfgs(problem.fun, z0, max_iters=cfg.max_iters, grad_tol=cfg.grad_tol)
            params = problem.unpack(res.x)
    except (NonFiniteObjectiveError, FloatingPointError, ValueError) as exc:
        log.warning("restart %d discarded: %s", index, exc)
        return RestartResult(index, None, nan, nan, 0, False, str(exc), [], time.perf_counter() - start)
    out = RestartResult(
        index, params, res.trace[0], res.fun, res.iterations, res.converged, res.message, res.trace,
        time.perf_counter() - start,
    )
    if truth is not None:
        out.matching, _ = match_components(params.means, truth.means)
        out.metrics = metrics(params, truth, out.matching)
    return out


def fit(x, m: int, config: FitConfig | None = None, truth: GmmParams | None = None, sigma=None) -> FitReport:
    """Run ``config.restarts`` independent optimisations and keep the lowest objective."""
    config = config or FitConfig()
    samples = as_samples(x)
    if samples.p < m:
        raise ValueError(f"need p >= m, got p={samples.p}, m={m}")
    problem = Problem(samples, m, config, sigma)
    start = time.perf_counter()
    workers = min(thread_count(), config.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _run_restart(problem, r, truth), range(config.restarts)))
    else:
        results = [_run_restart(problem, r, truth) for r in range(config.restarts)]
    valid = [r for r in results if r.params is not None and np.isfinite(r.final_objective)]
    if not valid:
        raise NonFiniteObjectiveError("every restart diverged")
    best = min(valid, key=lambda r: (r.final_objective, r.index))
    return FitReport(
        best.params, best.index, results, best.metrics, best.matching, time.perf_counter() - start, config
    )
