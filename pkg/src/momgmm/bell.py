"""Complete Bell polynomials and the cumulants of <X, X~> for Gaussian pairs.

The moment inner product of two Gaussians is ``B_d(kappa_1, ..., kappa_d)``
where the kappas are the cumulants of the scalar ``<X, X~>``.  Everything
here accepts indefinite symmetric covariances, which the debiasing code
relies on (it evaluates with ``-Sigma``).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import OrderOverflowError

MAX_ORDER = 18

FACTORIAL = np.array([math.factorial(k) for k in range(MAX_ORDER + 1)], dtype=float)
BINOM = np.array(
    [[math.comb(k, i) for i in range(MAX_ORDER + 1)] for k in range(MAX_ORDER + 1)],
    dtype=float,
)


def check_order(d: int, minimum: int = 0) -> int:
    d = int(d)
    if d < minimum:
        raise ValueError(f"moment order must be >= {minimum}, got {d}")
    if d > MAX_ORDER:
        raise OrderOverflowError(f"moment order {d} exceeds the supported maximum {MAX_ORDER}")
    return d


def double_factorial_odd(k: int) -> int:
    """Return (2k-1)!! as an exact integer, with (-1)!! = 1."""
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


def gaussian_coefficient(d: int, k: int) -> int:
    """C_{d,k} = binom(d, 2k) (2k-1)!!, the number of ways to pick k pairs from d slots."""
    if not 0 <= 2 * k <= d:
        raise ValueError(f"need 0 <= 2k <= d, got d={d}, k={k}")
    return math.comb(d, 2 * k) * double_factorial_odd(k)


def bell_prefix(kappas) -> np.ndarray:
    """All complete Bell polynomials B_0..B_d at the given cumulants.

    ``kappas`` has shape ``(d, ...)``; trailing axes are carried along
    elementwise, so a stack of m x m cumulant matrices yields the matrix
    Bell recursion used for mixture norms.
    """
    kappas = np.asarray(kappas, dtype=float)
    if kappas.ndim == 0:
        kappas = kappas[None]
    d = check_order(kappas.shape[0])
    out = np.empty((d + 1,) + kappas.shape[1:])
    out[0] = 1.0
    for k in range(1, d + 1):
        acc = np.zeros(kappas.shape[1:])
        for i in range(k):
            acc = acc + BINOM[k - 1, i] * out[i] * kappas[k - 1 - i]
        out[k] = acc
    return out


def bell_partial(kappas, i: int) -> float:
    """dB_d/dx_i = binom(d, i) B_{d-i}(x_1, ..., x_{d-i})."""
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    d = check_order(kappas.shape[0])
    if not 1 <= i <= d:
        raise IndexError(f"derivative index {i} outside 1..{d}")
    return BINOM[d, i] * bell_prefix(kappas[: d - i])[d - i] if d - i > 0 else BINOM[d, i]


def _partitions(k: int):
    """Yield multiplicity vectors j with sum_r r*j_r = k."""

    def rec(r, remaining):
        if r > k:
            if remaining == 0:
                yield ()
            return
        for count in range(remaining // r + 1):
            for tail in rec(r + 1, remaining - r * count):
                yield (count,) + tail

    yield from rec(1, k)


def bell_by_partitions(kappas) -> float:
    """B_d evaluated straight from the partition-sum definition (exponential cost)."""
    x = [float(v) for v in np.atleast_1d(kappas)]
    k = len(x)
    total = 0.0
    for js in _partitions(k):
        term = float(math.factorial(k))
        for r, j in enumerate(js, start=1):
            term /= math.factorial(j)
            term *= (x[r - 1] / math.factorial(r)) ** j
        total += term
    return total


def cumulants_general(mu, sigma, mu2, sigma2, d: int) -> np.ndarray:
    """Cumulants kappa_1..kappa_d of <X, X~> for X ~ N(mu, sigma), X~ ~ N(mu2, sigma2).

    With Z = sigma @ sigma2, even k = 2r gives
    (k-1)! tr(Z^r) + k!/2 (mu' sigma2 Z^(r-1) mu + mu2' Z^(r-1) sigma mu2),
    odd k = 2r+1 gives k! mu2' Z^r mu.  Powers of Z are built once.
    """
    d = check_order(d, 1)
    mu = np.asarray(mu, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    n = mu.shape[0]
    if mu2.shape != (n,) or sigma.shape != (n, n) or sigma2.shape != (n, n):
        raise ValueError("shape mismatch between means and covariances")

    z = sigma @ sigma2
    kappa = np.empty(d)
    zpow = np.eye(n)  # Z^r for the current r
    prev = np.eye(n)  # Z^(r-1)
    for k in range(1, d + 1):
        if k % 2:
            kappa[k - 1] = FACTORIAL[k] * (mu2 @ zpow @ mu)
        else:
            prev = zpow
            zpow = zpow @ z
            quad = mu @ sigma2 @ prev @ mu + mu2 @ prev @ sigma @ mu2
            kappa[k - 1] = FACTORIAL[k - 1] * np.trace(zpow) + FACTORIAL[k] / 2 * quad
    return kappa


def cumulants_diag(mu, dvec, mu2, dvec2, d: int) -> np.ndarray:
    """Same cumulants as :func:`cumulants_general` for sigma = diag(dvec)**2, in O(d n)."""
    d = check_order(d, 1)
    mu = np.asarray(mu, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    dvec = np.asarray(dvec, dtype=float)
    dvec2 = np.asarray(dvec2, dtype=float)
    if not (mu.shape == mu2.shape == dvec.shape == dvec2.shape) or mu.ndim != 1:
        raise ValueError("shape mismatch between means and standard deviations")

    s = dvec * dvec2
    kappa = np.empty(d)
    for k in range(1, d + 1):
        if k % 2:
            kappa[k - 1] = FACTORIAL[k] * np.sum(s ** (k - 1) * mu * mu2)
        else:
            sk2 = s ** (k - 2)
            v = np.sum(mu**2 * dvec2**2 * sk2) + np.sum(mu2**2 * dvec**2 * sk2)
            kappa[k - 1] = FACTORIAL[k - 1] * np.sum(s**k) + FACTORIAL[k] / 2 * v
    return kappa


def delta_identity_check(d: int, q: int) -> int:
    """sum_{k=0}^q C_{d,k} (-1)^k C_{d-2k,q-k} in exact integers; equals 1 if q == 0 else 0."""
    if q < 0 or d < 2 * q:
        raise ValueError(f"need d >= 2q >= 0, got d={d}, q={q}")
    return sum(
        gaussian_coefficient(d, k) * (-1) ** k * gaussian_coefficient(d - 2 * k, q - k)
        for k in range(q + 1)
    )
