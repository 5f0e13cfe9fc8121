"""Validation suites: convergence experiments, implicit-vs-explicit oracle checks and exact identities."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import bell, moments, symtensor
from .augment import augment_params, augment_samples, weighted_order_sum
from .debias import DebiasParams, component_tensor, fdeb1, fdeb2, unbiasedness_experiment
from .models import debias_model, moments_model
from .params import GmmParams
from .sampling import make_rng, sample_gmm

P_GRID = np.round(10 ** np.arange(2.0, 5.01, 0.5)).astype(int)
SLOPE_RANGE = (-0.65, -0.35)
ORACLE_RTOL = 1e-8


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def loglog_slope(p, err) -> float:
    """Least-squares slope of log(err) against log(p)."""
    return float(np.polyfit(np.log(np.asarray(p, float)), np.log(np.asarray(err, float)), 1)[0])


def moment_convergence(model: GmmParams, p_grid, seed: int, d: int = 3):
    """(p, ||M_d - Mhat_d||) rows, one fresh dataset per p."""
    target = symtensor.explicit_gmm_moment(model, d)
    rows = []
    for idx, p in enumerate(p_grid):
        x = sample_gmm(model, int(p), make_rng(seed, idx))
        rows.append((int(p), float(np.linalg.norm(symtensor.explicit_empirical_moment(x, d) - target))))
    return rows


def convergence_suite(kind: str, seed: int = 0, reps: int = 5, d: int = 3, p_grid=P_GRID):
    """Run ``reps`` seeds of the moment or debias experiment.

    Returns (rows, slopes, mean_slope, passed) with rows as (rep, p, error).
    """
    rows, slopes = [], []
    for rep in range(reps):
        s = seed * 1000 + rep
        if kind == "moments":
            table = moment_convergence(moments_model(), p_grid, s, d)
        elif kind == "debias":
            table = unbiasedness_experiment(debias_model(), p_grid, s, d)
        else:
            raise ValueError(f"unknown experiment {kind!r}")
        rows += [(rep, p, err) for p, err in table]
        slopes.append(loglog_slope(*zip(*table)))
    mean = float(np.mean(slopes))
    return rows, slopes, mean, SLOPE_RANGE[0] <= mean <= SLOPE_RANGE[1]


def random_psd(n: int, rng, jitter: float = 0.05) -> np.ndarray:
    g = rng.standard_normal((n, n)) / np.sqrt(n)
    return g @ g.T + jitter * np.eye(n)


def random_full_gmm(n: int, m: int, rng) -> GmmParams:
    return GmmParams(
        rng.dirichlet(np.ones(m)) if m > 1 else np.ones(1),
        rng.standard_normal((n, m)),
        covs=np.array([random_psd(n, rng) for _ in range(m)]),
    )


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


def oracle_suite(seed: int = 0, configs: int = 200, rtol: float = ORACLE_RTOL) -> list[Check]:
    """Implicit objectives against dense tensors for random full-covariance instances."""
    rng = make_rng(seed, 7001)
    out = []
    for c in range(configs):
        n, m = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        d, p = int(rng.integers(1, 7)), int(rng.integers(1, 21))
        params = random_full_gmm(n, m, rng)
        x = rng.standard_normal((n, p))
        tag = f"cfg{c}(n={n},m={m},d={d},p={p})"

        big = symtensor.explicit_gmm_moment(params, d)
        emp = symtensor.explicit_empirical_moment(x, d)
        f1 = moments.f1_general(params, d).value
        f2 = moments.f2_general(params, x, d).value
        e1 = _rel(f1, symtensor.inner(big, big))
        e2 = _rel(f2, symtensor.inner(big, emp))
        out.append(Check(f"F1 {tag}", e1 <= rtol, f"rel={e1:.2e}"))
        out.append(Check(f"F2 {tag}", e2 <= rtol, f"rel={e2:.2e}"))

        deb = DebiasParams(params.weights, params.means, params.covs[0])
        t = component_tensor(deb, d)
        that = symtensor.explicit_debiased_moment(x, deb.cov, d)
        g1 = _rel(fdeb1(deb, d).value, symtensor.inner(t, t))
        g2 = _rel(fdeb2(deb, x, d).value, symtensor.inner(t, that))
        out.append(Check(f"fdeb1 {tag}", g1 <= rtol, f"rel={g1:.2e}"))
        out.append(Check(f"fdeb2 {tag}", g2 <= rtol, f"rel={g2:.2e}"))
    return out


def binomial_theorem_checks(seed: int = 0, tol: float = 1e-12) -> list[Check]:
    rng = make_rng(seed, 7002)
    out = []
    for n in range(1, 4):
        for d in range(1, 6):
            v, u = rng.standard_normal(n), rng.standard_normal(n)
            lhs = symtensor.outer_power(v + u, d)
            rhs = sum(
                comb(d, k)
                * symtensor.sym(symtensor.tensor_product(symtensor.outer_power(v, k), symtensor.outer_power(u, d - k)))
                for k in range(d + 1)
            )
            err = float(np.max(np.abs(lhs - rhs)))
            out.append(Check(f"binomial n={n} d={d}", err <= tol, f"max={err:.2e}"))
    return out


def delta_checks(max_order: int = 16) -> list[Check]:
    out = []
    for d in range(max_order + 1):
        for q in range(d // 2 + 1):
            val = bell.delta_identity_check(d, q)
            out.append(Check(f"delta d={d} q={q}", val == (1 if q == 0 else 0), f"value={val}"))
    return out


def bell_partition_checks(seed: int = 0, max_order: int = 8) -> list[Check]:
    rng = make_rng(seed, 7003)
    out = []
    for d in range(max_order + 1):
        # integer cumulants keep both sides exact in floating point
        kap = rng.integers(-3, 4, size=d).astype(float)
        rec = bell.bell_prefix(kap)[d]
        part = bell.bell_by_partitions(kap)
        out.append(Check(f"bell d={d}", rec == part, f"{rec} vs {part}"))
    return out


def weight_identity_checks(seed: int = 0, count: int = 20, rtol: float = 1e-8) -> list[Check]:
    """Augmented objective against the binomially weighted sum over orders."""
    rng = make_rng(seed, 7004)
    out = []
    for c in range(count):
        n, m, d = int(rng.integers(2, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 6))
        omega = float(rng.uniform(0.3, 1.5))
        params = GmmParams(
            rng.dirichlet(np.ones(m)) if m > 1 else np.ones(1),
            rng.standard_normal((n, m)),
            stddevs=rng.uniform(0.2, 1.0, (n, m)),
        )
        x = rng.standard_normal((n, int(rng.integers(1, 15))))
        lhs = moments.objective(augment_params(params, omega), augment_samples(x, omega), d).value
        rhs = weighted_order_sum(params, x, d, omega)
        err = abs(lhs - rhs) / (1 + abs(lhs))
        out.append(Check(f"weights cfg{c} d={d}", err <= rtol, f"rel={err:.2e}"))
    return out


def rescale(params: GmmParams, gamma, d: int) -> GmmParams:
    """lambda_j gamma_j^-d N(gamma_j mu_j, gamma_j^2 Sigma_j): same order-d moment."""
    gamma = np.asarray(gamma, dtype=float)
    if params.diagonal:
        return GmmParams(params.weights * gamma**-d, params.means * gamma, stddevs=params.stddevs * np.abs(gamma))
    return GmmParams(params.weights * gamma**-d, params.means * gamma, covs=params.covs * gamma[:, None, None] ** 2)


def scale_ambiguity_checks(seed: int = 0, count: int = 10, omega: float = 0.5) -> list[Check]:
    rng = make_rng(seed, 7005)
    out = []
    for c in range(count):
        n, m, d = 3, int(rng.integers(2, 4)), int(rng.integers(2, 6))
        params = GmmParams(rng.dirichlet(np.ones(m)), rng.standard_normal((n, m)), stddevs=rng.uniform(0.2, 1.0, (n, m)))
        g = rng.uniform(0.5, 2.0, m)
        g *= np.sum(params.weights * g**-d) ** (1.0 / d)
        other = rescale(params, g, d)
        x = rng.standard_normal((n, 10))
        base = abs(moments.objective(params, x, d).value - moments.objective(other, x, d).value)
        xa = augment_samples(x, omega)
        aug = abs(
            moments.objective(augment_params(params, omega), xa, d).value
            - moments.objective(augment_params(other, omega), xa, d).value
        )
        out.append(Check(f"ambiguity cfg{c} d={d}", base <= 1e-9 and aug > 1e-6, f"plain={base:.1e} aug={aug:.1e}"))
    return out


def identities_suite(seed: int = 0) -> list[Check]:
    return (
        binomial_theorem_checks(seed)
        + delta_checks()
        + bell_partition_checks(seed)
        + weight_identity_checks(seed)
        + scale_ambiguity_checks(seed)
    )
