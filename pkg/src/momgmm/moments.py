"""Implicit GMM moment-matching objective F = F1 - 2 F2 and its gradients.

F1 = ||M_d||^2 and F2 = (1/p) sum_i <M_d, x_i^(x)d> are evaluated through
Bell polynomials of pairwise cumulants and the three-term alpha recursion,
never forming an n^d tensor.  Each routine takes an optional ``shift``
added to kappa_1 (F1) or to x_i'mu_j (F2); a shift of omega**2 evaluates
the objective of the data augmented with a constant coordinate omega.
"""
from __future__ import annotations

import numpy as np

from .bell import BINOM, FACTORIAL, bell_prefix, check_order, cumulants_general
from .params import GmmParams, ObjectiveEval


def _sample_data(x) -> np.ndarray:
    data = np.asarray(getattr(x, "data", x), dtype=float)
    if data.ndim != 2:
        raise ValueError("sample matrix must be n x p")
    if data.shape[1] == 0:
        raise ValueError("sample matrix has no observations")
    return data


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


# -- single Gaussian pair ---------------------------------------------------


def _psi_terms(mu, sigma, mu2, sigma2, d, shift=0.0, grads=True):
    """Psi value and gradients with respect to the first (mu, sigma)."""
    mu = np.asarray(mu, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    kappa = cumulants_general(mu, sigma, mu2, sigma2, d)
    kappa[0] += shift
    bell = bell_prefix(kappa)
    if not grads:
        return bell[d], None, None

    n = mu.shape[0]
    z = sigma @ sigma2
    zp = [np.eye(n)]
    for _ in range(d // 2):
        zp.append(zp[-1] @ z)
    g_mu = np.zeros(n)
    g_sigma = np.zeros((n, n))
    s2mu = sigma2 @ mu
    for k in range(1, d + 1):
        c = BINOM[d, k] * bell[d - k] * FACTORIAL[k]
        if c == 0.0:
            continue
        if k % 2:
            r = (k - 1) // 2
            g_mu += c * (zp[r].T @ mu2)
            for ell in range(r):
                g_sigma += c * np.outer(zp[ell].T @ mu2, (s2mu @ zp[r - 1 - ell]))
        else:
            r = k // 2
            g_mu += c * (sigma2 @ zp[r - 1] @ mu)
            acc = sigma2 @ zp[r - 1]
            for ell in range(r - 1):
                left = sigma2 @ zp[ell] @ mu
                right = (sigma2 @ zp[r - 2 - ell]).T @ mu
                acc = acc + np.outer(left, right)
            for ell in range(r):
                acc = acc + np.outer(zp[ell].T @ mu2, mu2 @ zp[r - 1 - ell])
            g_sigma += 0.5 * c * acc
    return bell[d], g_mu, _sym(g_sigma)


def psi_inner(mu, sigma, mu2, sigma2, d: int) -> float:
    """<E X^(x)d, E X~^(x)d> for X ~ N(mu, sigma), X~ ~ N(mu2, sigma2)."""
    return float(_psi_terms(mu, sigma, mu2, sigma2, d, grads=False)[0])


def psi_grad_mu(mu, sigma, mu2, sigma2, d: int) -> np.ndarray:
    return _psi_terms(mu, sigma, mu2, sigma2, d)[1]


def psi_grad_sigma(mu, sigma, mu2, sigma2, d: int) -> np.ndarray:
    """Gradient in sigma, returned symmetric (the gradient over symmetric matrices)."""
    return _psi_terms(mu, sigma, mu2, sigma2, d)[2]


def alpha_dot(mu, cov, a, d: int):
    """<M_d, a^(x)d> for a Gaussian moment, plus the prefix alpha^(0..d).

    ``cov`` is either an n x n covariance or a length-n stddev vector.
    """
    d = check_order(d)
    mu = np.asarray(mu, dtype=float)
    a = np.asarray(a, dtype=float)
    cov = np.asarray(cov, dtype=float)
    quad = float(a @ cov @ a) if cov.ndim == 2 else float(np.sum((a * cov) ** 2))
    lin = float(a @ mu)
    alpha = np.empty(d + 1)
    alpha[0] = 1.0
    if d >= 1:
        alpha[1] = lin
    for k in range(2, d + 1):
        alpha[k] = alpha[k - 1] * lin + (k - 1) * alpha[k - 2] * quad
    return alpha[d], alpha


# -- F1 = ||M_d||^2 ---------------------------------------------------------


def f1_general(params: GmmParams, d: int, shift: float = 0.0) -> ObjectiveEval:
    """Squared norm of the mixture moment via pairwise Bell evaluations."""
    d = check_order(d, 1)
    lam = params.weights
    a = params.means
    covs = params.covariances()
    m = params.m
    bell_d = np.empty((m, m))
    g_mu = np.zeros_like(a)
    g_cov = np.zeros_like(covs)
    for j in range(m):
        for i in range(m):
            val, gm, gs = _psi_terms(a[:, j], covs[j], a[:, i], covs[i], d, shift)
            bell_d[j, i] = val
            g_mu[:, j] += 2 * lam[j] * lam[i] * gm
            g_cov[j] += 2 * lam[j] * lam[i] * gs
    upper = np.triu_indices(m, 1)
    value = float(lam @ (np.diag(bell_d) * lam) + 2 * np.sum((lam[:, None] * lam[None, :] * bell_d)[upper]))
    return ObjectiveEval(value, 2 * bell_d @ lam, g_mu, g_cov)


def f1_diag(params: GmmParams, d: int, shift: float = 0.0) -> ObjectiveEval:
    """Squared norm of the mixture moment for diagonal covariances, O(d^2 m^2 + d m^2 n)."""
    if not params.diagonal:
        raise TypeError("f1_diag needs diagonal (stddev) covariances")
    d = check_order(d, 1)
    lam, a, dd = params.weights, params.means, params.stddevs
    dpow = [np.ones_like(dd)]
    for _ in range(d):
        dpow.append(dpow[-1] * dd)
    a2 = a * a

    kmat = np.empty((d,) + (lam.size, lam.size))
    for k in range(1, d + 1):
        if k % 2:
            t = dpow[k - 1] * a
            kmat[k - 1] = FACTORIAL[k] * (t.T @ t)
        else:
            v = dpow[k].T @ (dpow[k - 2] * a2)
            kmat[k - 1] = FACTORIAL[k - 1] * (dpow[k].T @ dpow[k]) + FACTORIAL[k] / 2 * (v + v.T)
    kmat[0] += shift
    bmat = bell_prefix(kmat)

    value = float(lam @ bmat[d] @ lam)
    w_lam = 2 * lam @ bmat[d]
    w_a = np.zeros_like(a)
    w_d = np.zeros_like(dd)
    ll = np.outer(lam, lam)
    for k in range(1, d + 1):
        bt = bmat[d - k] * ll
        fk = FACTORIAL[k]
        ck = 2 * BINOM[d, k]
        if k % 2:
            if k > 1:
                t_d = fk * dpow[k - 1] * a
                u_d = (k - 1) * dpow[k - 2] * a
                w_d += ck * (t_d @ bt) * u_d
            t_a = fk * dpow[k - 1] * a
            u_a = dpow[k - 1]
            w_a += ck * (t_a @ bt) * u_a
        else:
            t_d1 = fk * dpow[k] + k * fk / 2 * dpow[k - 2] * a2
            u_d1 = dpow[k - 1]
            t_d2 = fk / 2 * dpow[k]
            w_d += ck * (t_d1 @ bt) * u_d1
            if k > 2:
                u_d2 = (k - 2) * dpow[k - 3] * a2
                w_d += ck * (t_d2 @ bt) * u_d2
            t_a = fk * dpow[k]
            u_a = dpow[k - 2] * a
            w_a += ck * (t_a @ bt) * u_a
    return ObjectiveEval(value, w_lam, w_a, w_d)


# -- F2 = (1/p) sum_i <M_d, x_i^(x)d> ---------------------------------------


def _alpha_rolling(v: np.ndarray, q: np.ndarray, d: int):
    """alpha^(d-1) and alpha^(d-2) tables (p x m), keeping three levels at a time."""
    if d == 1:
        return np.ones_like(v), np.zeros_like(v)
    r2 = np.ones_like(v)
    r1 = v.copy()
    for k in range(2, d):
        r3, r2 = r2, r1
        r1 = r2 * v + (k - 1) * r3 * q
    return r1, r2


def f2_diag(params: GmmParams, x, d: int, shift: float = 0.0) -> ObjectiveEval:
    """Mean inner product of the mixture moment with the sample outer powers."""
    if not params.diagonal:
        raise TypeError("f2_diag needs diagonal (stddev) covariances")
    d = check_order(d, 1)
    data = _sample_data(x)
    p = data.shape[1]
    lam, a, dd = params.weights, params.means, params.stddevs
    x2 = data * data
    v = data.T @ a + shift
    q = x2.T @ (dd * dd)
    r1, r2 = _alpha_rolling(v, q, d)
    t = data @ r1
    u = (d - 1) * (x2 @ r2) * dd
    w_a = d * t * lam / p
    w_d = d * u * lam / p
    w_lam = (np.sum(t * a, axis=0) + np.sum(u * dd, axis=0) + shift * r1.sum(axis=0)) / p
    return ObjectiveEval(float(w_lam @ lam), w_lam, w_a, w_d)


def f2_general(params: GmmParams, x, d: int, shift: float = 0.0) -> ObjectiveEval:
    """As :func:`f2_diag` with full covariances; the covariance gradient is a weighted sample Gram."""
    d = check_order(d, 1)
    data = _sample_data(x)
    p = data.shape[1]
    lam, a = params.weights, params.means
    covs = params.covariances()
    v = data.T @ a + shift
    q = np.einsum("ni,jnk,ki->ij", data, covs, data)
    r1, r2 = _alpha_rolling(v, q, d)
    alpha_d = r1 * v + (d - 1) * r2 * q
    w_lam = alpha_d.sum(axis=0) / p
    w_a = d * (data @ r1) * lam / p
    gram = np.einsum("ni,ij,ki->jnk", data, r2, data)
    w_cov = BINOM[d, 2] * lam[:, None, None] * gram / p
    return ObjectiveEval(float(w_lam @ lam), w_lam, w_a, w_cov)


def empirical_constant(x, d: int, block: int = 2048) -> float:
    """(1/p^2) sum_{i,j} <x_i, x_j>^d, i.e. ||Mhat_d||^2.  Costs O(p^2 n)."""
    data = _sample_data(x)
    p = data.shape[1]
    total = 0.0
    for start in range(0, p, block):
        g = data[:, start : start + block].T @ data
        total += float(np.sum(g**d))
    return total / p**2


def objective(params: GmmParams, x, d: int, include_constant: bool = False, shift: float = 0.0) -> ObjectiveEval:
    """F = F1 - 2 F2, optionally plus ||Mhat_d||^2 so the value is ||M_d - Mhat_d||^2."""
    if params.diagonal:
        out = f1_diag(params, d, shift).combine(f2_diag(params, x, d, shift), -2.0)
    else:
        out = f1_general(params, d, shift).combine(f2_general(params, x, d, shift), -2.0)
    if include_constant:
        out.value += empirical_constant(x, d)
    return out
