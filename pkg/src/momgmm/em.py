"""Diagonal-covariance EM baseline, initialised exactly like the moment fitter."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .params import GmmParams
from .sampling import as_samples, initial_params, make_rng

log = logging.getLogger(__name__)

LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 500
    loglik_tol: float = 1e-8  # relative change in mean log-likelihood
    variance_floor: float = 1e-6  # relative to the per-coordinate sample variance
    restarts: int = 10
    seed: int = 0


@dataclass
class EmRestart:
    index: int
    params: GmmParams
    loglik: float
    iterations: int
    converged: bool
    runtime: float
    trace: list[float]


@dataclass
class EmReport:
    best_params: GmmParams
    best_index: int
    loglik: float
    restarts: list[EmRestart]


def _component_logpdf(params: GmmParams, x: np.ndarray) -> np.ndarray:
    """p x m matrix of log N(x_i; mu_j, Sigma_j)."""
    n = x.shape[0]
    if params.diagonal:
        var = params.stddevs**2
        if np.any(var <= 0):
            raise ValueError("zero variance component")
        prec = 1.0 / var
        quad = (x**2).T @ prec - 2 * x.T @ (params.means * prec) + np.sum(params.means**2 * prec, axis=0)
        return -0.5 * (quad + np.sum(np.log(var), axis=0) + n * LOG_2PI)
    out = np.empty((x.shape[1], params.m))
    for j, cov in enumerate(params.covariances()):
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError(f"covariance {j} is not positive definite") from None
        z = np.linalg.solve(chol, x - params.means[:, j : j + 1])
        out[:, j] = -0.5 * (np.sum(z**2, axis=0) + n * LOG_2PI) - np.sum(np.log(np.diag(chol)))
    return out


def log_likelihood(params: GmmParams, x) -> float:
    """Mean per-sample log-likelihood."""
    data = as_samples(x).data
    with np.errstate(divide="ignore"):
        logw = np.log(params.weights)
    return float(np.mean(logsumexp(_component_logpdf(params, data) + logw, axis=1)))


def _em_single(data: np.ndarray, init: GmmParams, config: EmConfig, rng):
    p = data.shape[1]
    floor = config.variance_floor * np.var(data, axis=1)[:, None]
    params = init
    prev = -np.inf
    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        with np.errstate(divide="ignore"):
            joint = _component_logpdf(params, data) + np.log(params.weights)
        norm = logsumexp(joint, axis=1)
        ll = float(np.mean(norm))
        trace.append(ll)
        resp = np.exp(joint - norm[:, None])
        counts = resp.sum(axis=0)
        weights = counts / p
        means = np.empty_like(params.means)
        var = np.empty_like(params.means)
        for j in range(params.m):
            if counts[j] < 1e-8:
                k = int(rng.integers(p))
                log.info("EM component %d emptied at iteration %d; reseeding from sample %d", j, it, k)
                means[:, j] = data[:, k]
                var[:, j] = np.var(data, axis=1)
                weights[j] = 1.0 / params.m
                continue
            means[:, j] = data @ resp[:, j] / counts[j]
            var[:, j] = (data**2) @ resp[:, j] / counts[j] - means[:, j] ** 2
        var = np.maximum(var, floor)
        params = GmmParams(weights / weights.sum(), means, stddevs=np.sqrt(var))
        if abs(ll - prev) <= config.loglik_tol * abs(ll):
            converged = True
            break
        prev = ll
    trace.append(log_likelihood(params, data))
    return params, trace, it, converged


def em_fit(x, m: int, config: EmConfig | None = None) -> EmReport:
    """Best-of-restarts EM; restart r starts from the same point the moment fitter uses."""
    config = config or EmConfig()
    samples = as_samples(x)
    runs = []
    for r in range(config.restarts):
        start = time.perf_counter()
        init = initial_params(samples, m, make_rng(config.seed, r))
        params, trace, its, ok = _em_single(samples.data, init, config, make_rng(config.seed, r, 1))
        runs.append(EmRestart(r, params, trace[-1], its, ok, time.perf_counter() - start, trace))
    best = max(runs, key=lambda e: (e.loglik, -e.index))
    return EmReport(best.params, best.index, best.loglik, runs)
