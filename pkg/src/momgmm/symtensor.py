"""Dense tensors as a brute-force reference for the implicit formulas.

Tensors are plain numpy arrays of shape ``(n,) * d``; an order-0 tensor is
a 0-d array.  Nothing here is meant for experiment-scale problems: sizes are
capped and every routine favours the literal definition over speed.
"""
from __future__ import annotations

from functools import reduce
from itertools import permutations
from math import factorial

import numpy as np

from .bell import gaussian_coefficient
from .errors import OracleScaleError

MAX_ENTRIES = 10**8
MAX_SYM_ORDER = 12


def _guard(n: int, d: int) -> None:
    if d < 0:
        raise ValueError(f"tensor order must be non-negative, got {d}")
    if n**d > MAX_ENTRIES:
        raise OracleScaleError(f"oracle size exceeded: {n}^{d} entries")


def dim(a: np.ndarray) -> int | None:
    """Dimension n of a tensor, or None for an order-0 tensor."""
    return a.shape[0] if a.ndim else None


def outer_power(v, d: int) -> np.ndarray:
    """v tensored with itself d times; d = 0 gives the scalar 1."""
    v = np.asarray(v, dtype=float)
    _guard(v.shape[0], d)
    if d == 0:
        return np.array(1.0)
    return reduce(np.multiply.outer, [v] * d)


def tensor_product(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim and b.ndim and a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    n = dim(a) or dim(b) or 1
    _guard(n, a.ndim + b.ndim)
    return np.multiply.outer(a, b)


def sym(a) -> np.ndarray:
    """Average of ``a`` over all permutations of its indices."""
    a = np.asarray(a, dtype=float)
    d = a.ndim
    if d > MAX_SYM_ORDER:
        raise OracleScaleError(f"oracle size exceeded: {d}! permutations")
    if d <= 1:
        return a.copy()
    out = np.zeros_like(a)
    for perm in permutations(range(d)):
        out += a.transpose(perm)
    return out / factorial(d)


def inner(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def phi_eval(a, z) -> float:
    """The homogeneous polynomial <A, z^(x)d> attached to tensor A."""
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    if a.ndim and z.shape != (a.shape[0],):
        raise ValueError("evaluation point has the wrong length")
    return inner(a, outer_power(z, a.ndim))


def _matrix_power_tensor(sigma: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.array(1.0)
    return reduce(np.multiply.outer, [sigma] * k)


def explicit_gaussian_moment(mu, sigma, d: int) -> np.ndarray:
    """E[X^(x)d] for X ~ N(mu, sigma) as a dense tensor (sigma may be indefinite)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n = mu.shape[0]
    if sigma.shape != (n, n):
        raise ValueError("covariance shape does not match mean")
    if d > MAX_SYM_ORDER:
        raise OracleScaleError(f"oracle size exceeded: order {d}")
    _guard(n, d)
    out = np.zeros((n,) * d) if d else np.array(0.0)
    for k in range(d // 2 + 1):
        term = np.multiply.outer(outer_power(mu, d - 2 * k), _matrix_power_tensor(sigma, k))
        out = out + gaussian_coefficient(d, k) * sym(term)
    return out


def explicit_gmm_moment(params, d: int) -> np.ndarray:
    covs = params.covariances()
    out = 0.0
    for j in range(params.m):
        out = out + params.weights[j] * explicit_gaussian_moment(params.means[:, j], covs[j], d)
    return np.asarray(out)


def _sample_data(x) -> np.ndarray:
    data = np.asarray(getattr(x, "data", x), dtype=float)
    if data.ndim != 2:
        raise ValueError("sample matrix must be n x p")
    if data.shape[1] == 0:
        raise ValueError("sample matrix has no observations")
    return data


def explicit_empirical_moment(x, d: int) -> np.ndarray:
    """(1/p) sum_i x_i^(x)d over the columns of an n x p sample matrix."""
    data = _sample_data(x)
    n, p = data.shape
    _guard(n, d)
    if d == 0:
        return np.array(1.0)
    block = max(1, 2**22 // n**d)
    out = np.zeros((n,) * d)
    for start in range(0, p, block):
        cols = data[:, start : start + block].T
        acc = cols
        for _ in range(d - 1):
            acc = acc[..., None] * cols.reshape((cols.shape[0],) + (1,) * (acc.ndim - 1) + (n,))
        out += acc.sum(axis=0)
    return out / p


def explicit_debiased_moment(x, sigma, d: int) -> np.ndarray:
    """Unbiased estimate of E[Y^(x)d] from samples of X = Y + N(0, sigma).

    Uses linearity: the per-sample sum collapses onto empirical moments of
    lower order, sum_k C_{d,k} (-1)^k sym(Mhat_{d-2k} (x) sigma^(x)k).
    """
    data = _sample_data(x)
    sigma = np.asarray(sigma, dtype=float)
    n = data.shape[0]
    if sigma.shape != (n, n):
        raise ValueError("covariance shape does not match samples")
    out = np.zeros((n,) * d) if d else np.array(0.0)
    for k in range(d // 2 + 1):
        term = np.multiply.outer(
            explicit_empirical_moment(data, d - 2 * k), _matrix_power_tensor(sigma, k)
        )
        out = out + gaussian_coefficient(d, k) * (-1) ** k * sym(term)
    return out
