import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momgmm import bell
from momgmm.errors import OrderOverflowError

from conftest import random_psd


def test_small_bell_polynomials_closed_form():
    x = np.array([2.0, 3.0, 5.0, 7.0])
    b = bell.bell_prefix(x)
    assert b[0] == 1
    assert b[1] == 2
    assert b[2] == 2**2 + 3
    assert b[3] == 2**3 + 3 * 2 * 3 + 5
    assert b[4] == 2**4 + 6 * 2**2 * 3 + 4 * 2 * 5 + 3 * 3**2 + 7


def test_bell_of_ones_gives_bell_numbers():
    bell_numbers = [1, 1, 2, 5, 15, 52, 203, 877, 4140]
    assert bell.bell_prefix(np.ones(8)).tolist() == bell_numbers


@pytest.mark.parametrize("d", range(0, 9))
def test_recursion_matches_partition_sum(d):
    rng = np.random.default_rng(d)
    x = rng.standard_normal(d)
    assert bell.bell_prefix(x)[d] == pytest.approx(bell.bell_by_partitions(x), rel=1e-12, abs=1e-12)


def test_partition_count_is_partition_function():
    counts = [sum(1 for _ in bell._partitions(k)) for k in range(1, 11)]
    assert counts == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


def test_elementwise_on_matrices():
    rng = np.random.default_rng(0)
    k = rng.standard_normal((4, 3, 3))
    b = bell.bell_prefix(k)
    for i in range(3):
        for j in range(3):
            assert np.allclose(b[:, i, j], bell.bell_prefix(k[:, i, j]))


def test_order_limit():
    bell.bell_prefix(np.ones(18))
    with pytest.raises(OrderOverflowError):
        bell.bell_prefix(np.ones(19))
    with pytest.raises(OrderOverflowError):
        bell.check_order(19)


@given(st.integers(1, 7), st.integers(1, 7))
def test_partial_derivative_fd(d, i):
    if i > d:
        return
    x = np.linspace(0.3, 1.1, d)
    e = np.zeros(d)
    e[i - 1] = 1
    h = 1e-6
    fd = (bell.bell_prefix(x + h * e)[d] - bell.bell_prefix(x - h * e)[d]) / (2 * h)
    assert bell.bell_partial(x, i) == pytest.approx(fd, rel=1e-6)


def test_gaussian_coefficients():
    assert bell.gaussian_coefficient(4, 2) == 3
    assert bell.gaussian_coefficient(6, 3) == 15
    assert bell.gaussian_coefficient(5, 1) == 10
    assert [bell.double_factorial_odd(k) for k in range(5)] == [1, 1, 3, 15, 105]


@pytest.mark.parametrize("d", range(0, 17))
def test_delta_identity(d):
    for q in range(d // 2 + 1):
        assert bell.delta_identity_check(d, q) == (1 if q == 0 else 0)


def test_delta_identity_is_exact_integer():
    assert isinstance(bell.delta_identity_check(16, 8), int)


def _moment_of_inner_mc(mu, s, mu2, s2, d, rng, count=400_000):
    x = rng.multivariate_normal(mu, s, count)
    y = rng.multivariate_normal(mu2, s2, count)
    return np.mean(np.sum(x * y, axis=1) ** d)


def test_cumulants_low_order_closed_forms():
    rng = np.random.default_rng(3)
    n = 3
    mu, mu2 = rng.standard_normal(n), rng.standard_normal(n)
    s, s2 = random_psd(n, rng), random_psd(n, rng)
    k = bell.cumulants_general(mu, s, mu2, s2, 3)
    assert k[0] == pytest.approx(mu @ mu2)
    var = np.trace(s @ s2) + mu @ s2 @ mu + mu2 @ s @ mu2
    assert k[1] == pytest.approx(var)


def test_cumulants_diag_matches_general():
    rng = np.random.default_rng(4)
    n = 4
    mu, mu2 = rng.standard_normal(n), rng.standard_normal(n)
    d1, d2 = rng.uniform(0.2, 1.5, n), rng.uniform(0.2, 1.5, n)
    a = bell.cumulants_diag(mu, d1, mu2, d2, 8)
    b = bell.cumulants_general(mu, np.diag(d1**2), mu2, np.diag(d2**2), 8)
    assert np.allclose(a, b, rtol=1e-12)


def test_bell_of_cumulants_matches_monte_carlo_moment():
    rng = np.random.default_rng(5)
    mu, mu2 = np.array([0.5, -0.2]), np.array([0.3, 0.4])
    s, s2 = np.array([[0.3, 0.1], [0.1, 0.2]]), np.array([[0.2, 0.0], [0.0, 0.25]])
    val = bell.bell_prefix(bell.cumulants_general(mu, s, mu2, s2, 3))[3]
    mc = _moment_of_inner_mc(mu, s, mu2, s2, 3, rng)
    assert val == pytest.approx(mc, abs=5e-3)


def test_factorial_table():
    assert bell.FACTORIAL[10] == math.factorial(10)
    assert bell.BINOM[7, 3] == 35
