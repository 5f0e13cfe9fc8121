"""Debiased moments under a known common covariance, and the decomposition objective.

With X = Y + N(0, Sigma), the debiased estimator That_d is unbiased for
T_d = E[Y^(x)d] = sum_j lambda_j mu_j^(x)d.  The mean vectors are recovered
by minimising ||T_d - That_d||^2, evaluated implicitly as f = f1 - 2 f2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symtensor
from .bell import check_order
from .params import GmmParams, ObjectiveEval


@dataclass(frozen=True)
class DebiasParams:
    """Weights and n x m means, with the known covariance.

    ``cov`` is either an n x n symmetric matrix or a length-n stddev vector
    (Sigma = diag(cov)**2).
    """

    weights: np.ndarray
    means: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.means, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        c = np.asarray(self.cov, dtype=float)
        if w.shape != (a.shape[1],):
            raise ValueError("weights do not match the number of means")
        if c.shape not in ((a.shape[0],), (a.shape[0], a.shape[0])):
            raise ValueError("covariance does not match the mean dimension")
        if c.ndim == 2 and not np.allclose(c, c.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", a)
        object.__setattr__(self, "cov", c)

    @property
    def n(self) -> int:
        return self.means.shape[0]

    @property
    def m(self) -> int:
        return self.means.shape[1]

    def cov_matrix(self) -> np.ndarray:
        return self.cov if self.cov.ndim == 2 else np.diag(self.cov**2)

    def cov_times(self, a: np.ndarray) -> np.ndarray:
        """Sigma @ a using the entrywise form when Sigma is diagonal."""
        if self.cov.ndim == 2:
            return self.cov @ a
        return (self.cov**2)[:, None] * a

    def as_gmm(self) -> GmmParams:
        """The mixture sum_j lambda_j N(mu_j, Sigma) these parameters describe."""
        if self.cov.ndim == 1:
            return GmmParams(self.weights, self.means, stddevs=np.repeat(self.cov[:, None], self.m, axis=1))
        return GmmParams(self.weights, self.means, covs=np.repeat(self.cov[None], self.m, axis=0))


def fdeb1(params: DebiasParams, d: int, shift: float = 0.0) -> ObjectiveEval:
    """||sum_j lambda_j mu_j^(x)d||^2 = sum_ij lambda_i lambda_j <mu_i, mu_j>^d."""
    d = check_order(d, 1)
    lam, a = params.weights, params.means
    b = a.T @ a + shift
    c = b ** (d - 1)
    u = (b * c) @ lam
    return ObjectiveEval(float(lam @ u), 2 * u, 2 * d * (a * lam) @ c * lam)


def _beta_rolling(v: np.ndarray, quad: np.ndarray, d: int):
    """beta^(d-1), beta^(d-2) for beta^(k) = beta^(k-1) v - (k-1) beta^(k-2) quad."""
    if d == 1:
        return np.ones_like(v), np.zeros_like(v)
    r2 = np.ones_like(v)
    r1 = v.copy()
    for k in range(2, d):
        r3, r2 = r2, r1
        r1 = r2 * v - (k - 1) * r3 * quad
    return r1, r2


def fdeb2(params: DebiasParams, x, d: int, shift: float = 0.0) -> ObjectiveEval:
    """sum_j lambda_j <mu_j^(x)d, That_d> through the beta recursion."""
    d = check_order(d, 1)
    data = symtensor._sample_data(x)
    p = data.shape[1]
    lam, a = params.weights, params.means
    v = data.T @ a + shift
    y = params.cov_times(a)
    quad = np.sum(y * a, axis=0)
    r1, r2 = _beta_rolling(v, quad[None, :], d)
    z = (data @ r1 - (d - 1) * y * r2.sum(axis=0)) / p
    w = np.sum(z * a, axis=0) + shift * r1.sum(axis=0) / p
    return ObjectiveEval(float(lam @ w), w, d * z * lam)


def fdeb(params: DebiasParams, x, d: int, shift: float = 0.0) -> ObjectiveEval:
    """f = f1 - 2 f2; adding ||That_d||^2 gives ||T_d - That_d||^2."""
    return fdeb1(params, d, shift).combine(fdeb2(params, x, d, shift), -2.0)


def component_tensor(params: DebiasParams, d: int) -> np.ndarray:
    """Dense T_d = sum_j lambda_j mu_j^(x)d (oracle scale only)."""
    out = 0.0
    for j in range(params.m):
        out = out + params.weights[j] * symtensor.outer_power(params.means[:, j], d)
    return np.asarray(out)


def unbiasedness_experiment(model: DebiasParams, p_grid, seed: int, d: int = 3):
    """(p, ||T_d - That_d||) rows, one fresh dataset per p."""
    from .sampling import make_rng, sample_gmm

    target = component_tensor(model, d)
    sigma = model.cov_matrix()
    gmm = model.as_gmm()
    rows = []
    for idx, p in enumerate(p_grid):
        x = sample_gmm(gmm, int(p), make_rng(seed, idx))
        est = symtensor.explicit_debiased_moment(x, sigma, d)
        rows.append((int(p), float(np.linalg.norm(est - target))))
    return rows


def unbiasedness_monte_carlo(model: DebiasParams, p: int, reps: int, seed: int, d: int = 3):
    """Monte Carlo mean and standard error of That_d over ``reps`` datasets.

    Returns (target, mean, stderr) dense tensors.
    """
    from .sampling import make_rng, sample_gmm

    sigma = model.cov_matrix()
    gmm = model.as_gmm()
    draws = np.stack(
        [symtensor.explicit_debiased_moment(sample_gmm(gmm, p, make_rng(seed, r)), sigma, d) for r in range(reps)]
    )
    return component_tensor(model, d), draws.mean(axis=0), draws.std(axis=0, ddof=1) / np.sqrt(reps)
