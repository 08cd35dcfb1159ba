import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metricdcov import PairedSample, discrete, euclidean, hilbert_l2

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_sample(rng, kind, n, beta=1.0, dim=2, alphabet=3):
    """Random paired sample with both marginals of the given kind."""
    if kind == "euclidean":
        sx, sy = euclidean(dim, beta), euclidean(1, beta)
        return PairedSample(rng.normal(size=(n, dim)), rng.normal(size=n), sx, sy)
    if kind == "hilbert_l2":
        sx, sy = hilbert_l2(8, beta), hilbert_l2(8, beta)
        return PairedSample(rng.normal(size=(n, 8)), rng.normal(size=(n, 8)), sx, sy)
    if kind == "discrete":
        sx, sy = discrete(alphabet, beta), discrete(alphabet + 1, beta)
        return PairedSample(rng.integers(alphabet, size=n), rng.integers(alphabet + 1, size=n),
                            sx, sy)
    raise ValueError(kind)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def worked_pair():
    """n = 2 with d(x1, x2) = 2 and d(y1, y2) = 2."""
    return PairedSample([0.0, 2.0], [1.0, 3.0], euclidean(1), euclidean(1))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Lines are echoed as the test runs and repeated in the terminal summary.
    """
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def record(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
        lines.append((number, line))
        with capman.global_and_fixture_disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
