import mpmath as mp
import pytest

from sphankel import PrecisionContext, WeightParams, build_system, precision_policy


@pytest.fixture(scope="session")
def system_cache():
    """Hankel systems at policy precision, built once per session."""
    cache = {}

    def get(alpha, t, N, bits=None):
        key = (str(alpha), str(t), N, bits)
        if key not in cache:
            p = WeightParams(alpha, t)
            cache[key] = build_system(p, N, PrecisionContext(bits or precision_policy(N, p)))
        return cache[key]

    return get


def rel(x, y):
    x, y = mp.mpf(x), mp.mpf(y)
    return abs(x - y) / abs(y)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
