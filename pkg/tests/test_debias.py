import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momgmm import bell, symtensor as T
from momgmm.debias import (
    DebiasParams,
    component_tensor,
    fdeb,
    fdeb1,
    fdeb2,
    unbiasedness_experiment,
    unbiasedness_monte_carlo,
)
from momgmm.models import debias_model
from momgmm.validate import loglog_slope

from conftest import random_psd, rel_err


def rand_params(n, m, rng, diagonal=False):
    cov = rng.uniform(0.3, 1.0, n) if diagonal else random_psd(n, rng)
    return DebiasParams(rng.dirichlet(np.ones(m)), rng.standard_normal((n, m)), cov)


def test_fdeb1_single_component():
    rng = np.random.default_rng(0)
    p = rand_params(3, 1, rng)
    p = DebiasParams([1.0], p.means, p.cov)
    assert fdeb1(p, 3).value == pytest.approx(np.linalg.norm(p.means) ** 6)


def test_fdeb1_oracle():
    rng = np.random.default_rng(1)
    p = rand_params(2, 3, rng)
    t = component_tensor(p, 3)
    assert rel_err(fdeb1(p, 3).value, T.inner(t, t)) <= 1e-10


def test_fdeb2_zero_covariance_is_power_sum():
    rng = np.random.default_rng(2)
    p = DebiasParams([0.4, 0.6], rng.standard_normal((2, 2)), np.zeros((2, 2)))
    x = rng.standard_normal((2, 8))
    ref = np.mean(((x.T @ p.means) ** 4) @ p.weights)
    assert fdeb2(p, x, 4).value == pytest.approx(ref)


def test_fdeb2_oracle():
    rng = np.random.default_rng(3)
    p = rand_params(2, 2, rng)
    x = rng.standard_normal((2, 10))
    that = T.explicit_debiased_moment(x, p.cov, 4)
    ref = sum(p.weights[j] * T.inner(T.outer_power(p.means[:, j], 4), that) for j in range(2))
    assert rel_err(fdeb2(p, x, 4).value, ref) <= 1e-9


def test_fdeb2_is_bell_with_negative_variance():
    rng = np.random.default_rng(4)
    p = rand_params(3, 1, rng)
    p = DebiasParams([1.0], p.means, p.cov)
    x = rng.standard_normal((3, 6))
    mu = p.means[:, 0]
    ref = np.mean([bell.bell_prefix([mu @ x[:, i], -(mu @ p.cov @ mu), 0, 0, 0])[5] for i in range(6)])
    assert fdeb2(p, x, 5).value == pytest.approx(ref)


def test_fdeb_with_constant_is_squared_distance():
    rng = np.random.default_rng(5)
    p = rand_params(2, 3, rng)
    x = rng.standard_normal((2, 12))
    that = T.explicit_debiased_moment(x, p.cov, 3)
    ref = np.sum((component_tensor(p, 3) - that) ** 2)
    assert rel_err(fdeb(p, x, 3).value + T.inner(that, that), ref) <= 1e-9


def test_diagonal_cov_matches_matrix():
    rng = np.random.default_rng(6)
    p = rand_params(3, 2, rng, diagonal=True)
    q = DebiasParams(p.weights, p.means, p.cov_matrix())
    x = rng.standard_normal((3, 9))
    a, b = fdeb(p, x, 4), fdeb(q, x, 4)
    assert a.value == pytest.approx(b.value, rel=1e-12)
    assert np.allclose(a.grad_means, b.grad_means)


@given(st.integers(1, 6), st.booleans(), st.floats(0, 0.5), st.integers(0, 1000))
def test_gradients_fd(d, diagonal, shift, seed):
    rng = np.random.default_rng(seed)
    p = rand_params(3, 2, rng, diagonal)
    x = rng.standard_normal((3, 11))
    dl, da = rng.standard_normal(2), rng.standard_normal((3, 2))
    h = 1e-6
    for fun in (lambda q: fdeb1(q, d, shift), lambda q: fdeb2(q, x, d, shift), lambda q: fdeb(q, x, d, shift)):
        ev = fun(p)
        plus = fun(DebiasParams(p.weights + h * dl, p.means + h * da, p.cov)).value
        minus = fun(DebiasParams(p.weights - h * dl, p.means - h * da, p.cov)).value
        fd = (plus - minus) / (2 * h)
        assert rel_err(ev.grad_weights @ dl + np.sum(ev.grad_means * da), fd) <= 1e-5


def test_true_means_near_minus_norm_with_many_samples():
    from momgmm.sampling import make_rng, sample_gmm

    model = debias_model()
    x = sample_gmm(model.as_gmm(), 100_000, make_rng(9))
    t = component_tensor(model, 3)
    assert fdeb(model, x, 3).value == pytest.approx(-T.inner(t, t), rel=0.02)


def test_convergence_slope_debias_model():
    rows = unbiasedness_experiment(debias_model(), np.round(10 ** np.arange(2, 5.01, 0.5)).astype(int), 0)
    assert all(e > 0 for _, e in rows)
    assert -0.75 <= loglog_slope(*zip(*rows)) <= -0.25


def test_point_mass_error_is_empirical_deviation():
    p = DebiasParams([0.5, 0.5], np.array([[1.0, -1.0], [0.5, 0.5]]), np.zeros((2, 2)))
    from momgmm.sampling import make_rng, sample_gmm

    rows = unbiasedness_experiment(p, [40], 3)
    x = sample_gmm(p.as_gmm(), 40, make_rng(3, 0))
    ref = np.linalg.norm(T.explicit_empirical_moment(x, 3) - component_tensor(p, 3))
    assert rows[0][1] == pytest.approx(ref, rel=1e-12)


def test_monte_carlo_unbiased_small():
    target, mean, se = unbiasedness_monte_carlo(debias_model(), 200, 50, seed=1)
    assert np.all(np.abs(mean - target) <= 4 * se + 1e-12)


def test_validation():
    with pytest.raises(ValueError):
        DebiasParams([1.0], np.zeros((2, 1)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        DebiasParams([0.5, 0.5], np.zeros((2, 1)), np.zeros(2))
    with pytest.raises(ValueError):
        DebiasParams([1.0], np.zeros((2, 1)), np.array([[1.0, 0.5], [0.0, 1.0]]))
