"""Parameter containers shared by the moment, debiasing and fitting code."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GmmParams:
    """Mixture weights, means and covariances of an m-component GMM on R^n.

    ``means`` is n x m with one column per component.  Exactly one
    covariance representation is set: ``stddevs`` (n x m, so that
    Sigma_j = diag(stddevs[:, j])**2) or ``covs`` (m x n x n).
    """

    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray | None = None
    covs: np.ndarray | None = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        a = np.asarray(self.means, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", a)
        n, m = a.shape
        if w.shape != (m,):
            raise ValueError(f"expected {m} weights, got shape {w.shape}")
        if (self.stddevs is None) == (self.covs is None):
            raise ValueError("give exactly one of stddevs or covs")
        if self.stddevs is not None:
            s = np.asarray(self.stddevs, dtype=float).reshape(n, m)
            object.__setattr__(self, "stddevs", s)
        else:
            c = np.asarray(self.covs, dtype=float).reshape(m, n, n)
            if not np.allclose(c, c.transpose(0, 2, 1), rtol=0, atol=1e-12):
                raise ValueError("covariance matrices must be symmetric")
            object.__setattr__(self, "covs", c)

    @property
    def n(self) -> int:
        return self.means.shape[0]

    @property
    def m(self) -> int:
        return self.means.shape[1]

    @property
    def diagonal(self) -> bool:
        return self.stddevs is not None

    def covariances(self) -> np.ndarray:
        """Full m x n x n covariance stack for either representation."""
        if self.covs is not None:
            return self.covs
        return np.stack([np.diag(self.stddevs[:, j] ** 2) for j in range(self.m)])

    def to_full(self) -> GmmParams:
        return GmmParams(self.weights, self.means, covs=self.covariances())

    def is_mixture(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.weights >= -tol) and abs(self.weights.sum() - 1) <= tol)

    def permuted(self, order) -> GmmParams:
        order = np.asarray(order)
        if self.diagonal:
            return GmmParams(self.weights[order], self.means[:, order], stddevs=self.stddevs[:, order])
        return GmmParams(self.weights[order], self.means[:, order], covs=self.covs[order])


@dataclass
class ObjectiveEval:
    """Objective value with gradients shaped like the parameters.

    ``grad_cov`` matches ``stddevs`` (n x m) or ``covs`` (m x n x n); it is
    None for objectives without covariance parameters.
    """

    value: float
    grad_weights: np.ndarray
    grad_means: np.ndarray
    grad_cov: np.ndarray | None = None

    def combine(self, other: ObjectiveEval, scale: float) -> ObjectiveEval:
        """self + scale * other."""
        cov = None
        if self.grad_cov is not None:
            cov = self.grad_cov + scale * other.grad_cov
        return ObjectiveEval(
            self.value + scale * other.value,
            self.grad_weights + scale * other.grad_weights,
            self.grad_means + scale * other.grad_means,
            cov,
        )
