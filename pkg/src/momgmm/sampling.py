"""Seedable synthetic data: GMM draws and the structured benchmark generator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import GmmParams


@dataclass(frozen=True)
class SampleMatrix:
    """n x p observations stored column-wise.

    ``omega`` is set when the last row is the constant augmentation row.
    """

    data: np.ndarray
    omega: float | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("sample matrix must be two-dimensional (n x p)")
        if 0 in data.shape:
            raise ValueError(f"sample matrix is empty: shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("sample matrix contains non-finite entries")
        if self.omega is not None and not np.all(data[-1] == self.omega):
            raise ValueError("augmentation row is not constant")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def augmented(self) -> bool:
        return self.omega is not None


def as_samples(x) -> SampleMatrix:
    return x if isinstance(x, SampleMatrix) else SampleMatrix(np.asarray(x, dtype=float))


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, *keys); distinct keys give independent streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed)


def sample_gmm(params: GmmParams, p: int, seed) -> SampleMatrix:
    """Draw p observations: a component from Categorical(weights), then its Gaussian."""
    if p <= 0:
        raise ValueError("number of samples must be positive")
    if not params.is_mixture(1e-9):
        raise ValueError("weights must lie on the probability simplex")
    rng = _rng(seed)
    n, m = params.n, params.m
    w = np.clip(params.weights, 0, None)
    labels = rng.choice(m, size=p, p=w / w.sum())
    g = rng.standard_normal((n, p))
    if params.diagonal:
        scale = params.stddevs[:, labels] * g
    else:
        roots = []
        for cov in params.covs:
            evals, evecs = np.linalg.eigh(cov)
            if evals.min() < -1e-10:
                raise ValueError("covariance matrix is not positive semidefinite")
            roots.append((evecs * np.sqrt(np.clip(evals, 0, None))) @ evecs.T)
        scale = np.empty((n, p))
        for j in range(m):
            sel = labels == j
            scale[:, sel] = roots[j] @ g[:, sel]
    return SampleMatrix(params.means[:, labels] + scale)


def equiangular_means(n: int, m: int, rng, inner: float = 0.5) -> np.ndarray:
    """m unit vectors in R^n with all pairwise inner products equal to ``inner``.

    Columns mu_j = a e_j + b u with u the normalised all-ones vector of R^m,
    then embedded in R^n and rotated by a random orthogonal matrix.
    """
    if m > n:
        raise ValueError(f"cannot place {m} equiangular means in {n} dimensions")
    a = np.sqrt(1 - inner)
    b = -a / np.sqrt(m) + np.sqrt(a * a / m + inner)
    base = np.zeros((n, m))
    base[:m] = a * np.eye(m) + b / np.sqrt(m)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    return q @ base


def random_weights(m: int, rng, minimum: float = 0.01) -> np.ndarray:
    """Dirichlet(1, ..., 1) draws rejected until every weight is >= minimum."""
    if m * minimum > 1:
        raise ValueError("minimum weight is infeasible for this many components")
    while True:
        w = rng.dirichlet(np.ones(m))
        if w.min() >= minimum:
            return w


def make_benchmark(n: int, m: int, sigma2: float, p: int, seed):
    """Hard-to-separate mixture: unit means at pairwise inner product 0.5,
    diagonal variances uniform on [0, 2 sigma2], weights >= 0.01.

    Returns (truth, samples).
    """
    rng = _rng(seed)
    means = equiangular_means(n, m, rng)
    variances = rng.uniform(0, 2 * sigma2, size=(n, m))
    weights = random_weights(m, rng)
    truth = GmmParams(weights, means, stddevs=np.sqrt(variances))
    return truth, sample_gmm(truth, p, rng)


def initial_params(x, m: int, rng) -> GmmParams:
    """Sample-based starting point shared by the moment fitter and EM.

    Means are m distinct observations plus jitter at 0.1 x the per-coordinate
    sample stddev; stddevs start at that sample stddev; weights are uniform.
    """
    data = as_samples(x).data
    n, p = data.shape
    if p < m:
        raise ValueError(f"need at least m={m} samples, got {p}")
    std = data.std(axis=1)
    idx = rng.choice(p, size=m, replace=False)
    means = data[:, idx] + 0.1 * std[:, None] * rng.standard_normal((n, m))
    return GmmParams(np.full(m, 1 / m), means, stddevs=np.repeat(std[:, None], m, axis=1))
