from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momgmm import moments
from momgmm.estimator import FitConfig, Problem, fit, match_components, metrics, thread_count
from momgmm.models import debias_model, moments_model
from momgmm.params import GmmParams
from momgmm.sampling import initial_params, make_rng, sample_gmm

from conftest import rel_err

COMBOS = [(mode, variant) for mode in ("moments", "debias") for variant in ("none", "implicit", "postprocess")]


def test_match_identity_and_swap():
    mu = np.array([[0.0, 1.0, 5.0], [0.0, 2.0, -1.0]])
    order, cost = match_components(mu, mu)
    assert order.tolist() == [0, 1, 2]
    assert cost == 0
    order, _ = match_components(mu[:, [1, 0, 2]], mu)
    assert order.tolist() == [1, 0, 2]


def test_match_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10):
        est, tru = rng.standard_normal((3, 5)), rng.standard_normal((3, 5))
        order, cost = match_components(est, tru)
        best = min(
            sum(np.linalg.norm(est[:, perm[j]] - tru[:, j]) for j in range(5)) for perm in permutations(range(5))
        )
        assert cost == pytest.approx(best)
        assert sum(np.linalg.norm(est[:, order[j]] - tru[:, j]) for j in range(5)) == pytest.approx(best)


def test_metrics_examples():
    truth = GmmParams([0.5, 0.5], np.array([[1.0, 0.0], [0.0, 1.0]]), stddevs=np.ones((2, 2)))
    same = metrics(truth, truth, [0, 1])
    assert (same.proportion_error, same.mean_rel_error, same.cov_rel_error, same.cosine_angle) == (0, 0, 0, 1)
    est = GmmParams([0.6, 0.4], truth.means, stddevs=np.ones((2, 2)))
    assert metrics(est, truth, [0, 1]).proportion_error == pytest.approx(0.2)
    rotated = GmmParams([0.5, 0.5], np.array([[0.0, -1.0], [1.0, 0.0]]), stddevs=np.ones((2, 2)))
    assert metrics(rotated, truth, [0, 1]).cosine_angle == pytest.approx(0.0)


def test_metrics_zero_mean_flagged():
    truth = GmmParams([1.0], np.zeros((2, 1)), stddevs=np.ones((2, 1)))
    est = GmmParams([1.0], np.array([[0.1], [0.0]]), stddevs=np.ones((2, 1)))
    out = metrics(est, truth, [0])
    assert out.mean_rel_error == pytest.approx(0.1)
    assert any("mean_abs_error" in f for f in out.flags)


@pytest.mark.parametrize("mode,variant", COMBOS)
def test_reparameterised_gradients(mode, variant):
    rng = make_rng(11)
    truth = debias_model().as_gmm() if mode == "debias" else moments_model()
    x = sample_gmm(truth, 60, rng)
    for d in (2, 3, 4):
        prob = Problem(x, 3, FitConfig(d=d, mode=mode, variant=variant), sigma=debias_model().cov)
        for k in range(20 if d == 3 else 3):
            z = prob.pack(initial_params(x, 3, make_rng(k)))
            z = z + 0.1 * rng.standard_normal(z.size)
            _, g = prob.fun(z)
            e = rng.standard_normal(z.size)
            h = 1e-6
            fd = (prob.fun(z + h * e)[0] - prob.fun(z - h * e)[0]) / (2 * h)
            assert rel_err(g @ e, fd) <= 1e-5


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(d=19)
    with pytest.raises(ValueError):
        FitConfig(d=0)
    with pytest.raises(ValueError):
        FitConfig(restarts=0)
    with pytest.raises(ValueError):
        FitConfig(variant="other")
    with pytest.raises(ValueError):
        Problem(np.ones((2, 5)), 1, FitConfig(mode="debias"))


def test_thread_count(monkeypatch):
    monkeypatch.setenv("MOMGMM_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("MOMGMM_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("MOMGMM_THREADS", "-1")
    with pytest.raises(ValueError):
        thread_count()


def test_single_gaussian_matches_sample_statistics():
    rng = make_rng(3)
    x = rng.standard_normal((4, 20000)) * 0.5 + np.array([[1.0], [-0.5], [0.3], [2.0]])
    report = fit(x, 1, FitConfig(d=2, variant="implicit", restarts=2))
    assert report.best_params.weights.tolist() == [1.0]
    assert np.allclose(report.best_params.means[:, 0], x.mean(axis=1), atol=0.01)
    assert np.allclose(report.best_params.stddevs[:, 0], x.std(axis=1), atol=0.01)


def test_two_dimensional_model_matches_third_moment():
    # at n=2, m=3, d=3 the parameters are not identifiable, but the fitted mixture matches the moment
    truth = moments_model()
    x = sample_gmm(truth, 10_000, make_rng(1))
    report = fit(x, 3, FitConfig(restarts=2), truth=truth)
    resid = moments.objective(report.best_params, x, 3, include_constant=True).value
    assert resid <= 1e-8
    assert report.metrics is not None


def test_debias_recovers_means():
    model = debias_model()
    truth = model.as_gmm()
    x = sample_gmm(truth, 10_000, make_rng(1))
    report = fit(x, 3, FitConfig(mode="debias"), truth=truth, sigma=model.cov)
    assert report.metrics.cosine_angle >= 0.99
    assert np.allclose(report.best_params.covs, model.cov)


def test_threads_do_not_change_result(monkeypatch):
    model = debias_model()
    x = sample_gmm(model.as_gmm(), 2000, make_rng(4))
    out = []
    for threads in ("1", "3"):
        monkeypatch.setenv("MOMGMM_THREADS", threads)
        r = fit(x, 3, FitConfig(mode="debias", variant="implicit", restarts=4), sigma=model.cov)
        out.append((r.best_index, r.best_params.means.tobytes(), [t.final_objective for t in r.restarts]))
    assert out[0] == out[1]


def test_best_is_lowest_objective():
    model = debias_model()
    x = sample_gmm(model.as_gmm(), 2000, make_rng(5))
    r = fit(x, 3, FitConfig(mode="debias", variant="none", restarts=5, seed=2), sigma=model.cov)
    finals = [t.final_objective for t in r.restarts]
    assert r.best_index == int(np.argmin(finals))
    assert all(t.trace[-1] <= t.trace[0] for t in r.restarts)
    assert len(r.objective_traces) == 5


@given(st.integers(2, 6))
def test_fit_rejects_too_few_samples(m):
    with pytest.raises(ValueError):
        fit(np.ones((2, m - 1)), m, FitConfig(restarts=1))
