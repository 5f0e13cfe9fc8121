"""Augmentation with a constant coordinate omega, matching all orders 1..d at once.

Appending omega to every sample and mean (with a zero covariance row and
column) turns the order-d objective into sum_k binom(d,k) omega^(2(d-k)) F^(k).
The implicit variant evaluates that without forming the augmented
variables; the post-processing variant optimises freely over R^(n+1) and
rescales each component afterwards.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import moments
from .debias import DebiasParams, fdeb
from .errors import DegenerateAugmentationError
from .params import GmmParams, ObjectiveEval
from .sampling import SampleMatrix, as_samples

log = logging.getLogger(__name__)

DEFAULT_OMEGA = 0.5
Variant = Literal["implicit", "postprocess"]


@dataclass(frozen=True)
class AugmentConfig:
    omega: float = DEFAULT_OMEGA
    variant: Variant = "postprocess"
    d: int = 3

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.variant not in ("implicit", "postprocess"):
            raise ValueError(f"unknown augmentation variant {self.variant!r}")


def augment_samples(x, omega: float = DEFAULT_OMEGA) -> SampleMatrix:
    x = as_samples(x)
    if x.augmented:
        raise ValueError("samples are already augmented")
    return SampleMatrix(np.vstack([x.data, np.full((1, x.p), float(omega))]), omega=float(omega))


def augment_params(params: GmmParams, omega: float) -> GmmParams:
    """Means get a trailing omega; covariances a zero last row and column."""
    means = np.vstack([params.means, np.full((1, params.m), float(omega))])
    if params.diagonal:
        return GmmParams(params.weights, means, stddevs=np.vstack([params.stddevs, np.zeros((1, params.m))]))
    covs = np.zeros((params.m, params.n + 1, params.n + 1))
    covs[:, : params.n, : params.n] = params.covs
    return GmmParams(params.weights, means, covs=covs)


def objective_implicit_augmented(params: GmmParams, x, d: int, omega: float = DEFAULT_OMEGA) -> ObjectiveEval:
    """Augmented objective F(theta-bar) with gradients in the original n-dimensional parameters."""
    return moments.objective(params, x, d, shift=float(omega) ** 2)


def debias_implicit_augmented(params: DebiasParams, x, d: int, omega: float = DEFAULT_OMEGA) -> ObjectiveEval:
    return fdeb(params, x, d, shift=float(omega) ** 2)


def weighted_order_sum(params: GmmParams, x, d: int, omega: float) -> float:
    """sum_{k=0}^d binom(d,k) omega^(2(d-k)) F^(k)(theta), with F^(0) = -1."""
    total = -float(omega) ** (2 * d)
    for k in range(1, d + 1):
        total += math.comb(d, k) * float(omega) ** (2 * (d - k)) * moments.objective(params, x, k).value
    return total


def postprocess_solution(solution: GmmParams, omega: float, d: int) -> GmmParams:
    """Map a relaxed solution over R^(n+1) back to a mixture over R^n.

    gamma_j = omega / mu_j[n]; means scale by gamma_j, covariances by
    gamma_j^2 and weights by gamma_j^(-d), after which weights are
    renormalised to sum to one.
    """
    last = solution.means[-1]
    if np.any(np.abs(last) < 1e-8 * omega):
        raise DegenerateAugmentationError("augmented coordinate of a fitted mean is (near) zero")
    gamma = omega / last
    n = solution.n - 1
    means = gamma * solution.means[:n]
    weights = gamma ** (-float(d)) * solution.weights
    if np.any(weights < 0):
        log.warning("post-processing produced negative weights %s; clipping to zero", weights)
        weights = np.clip(weights, 0, None)
    total = weights.sum()
    if not total > 0:
        raise DegenerateAugmentationError("all post-processed weights vanished")
    weights = weights / total
    if solution.diagonal:
        return GmmParams(weights, means, stddevs=np.abs(gamma) * solution.stddevs[:n])
    covs = gamma[:, None, None] ** 2 * solution.covs[:, :n, :n]
    return GmmParams(weights, means, covs=covs)
