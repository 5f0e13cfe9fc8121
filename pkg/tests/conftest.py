import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_psd(n, rng, jitter=0.1):
    g = rng.standard_normal((n, n)) / np.sqrt(n)
    return g @ g.T + jitter * np.eye(n)


def random_sym(n, rng):
    g = rng.standard_normal((n, n))
    return (g + g.T) / 2


def central_diff(f, x, direction, h=1e-6):
    return (f(x + h * direction) - f(x - h * direction)) / (2 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "", expected_failure: bool = False):
    status = "PASS" if passed else ("FAIL (known, xfail)" if expected_failure else "FAIL")
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
