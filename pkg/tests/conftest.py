import numpy as np
import pytest


def simulate_ar(coeffs, n, seed, innovation_var=1.0, burn_in=500):
    """Plain loop AR simulator, independent of the library's filtering code."""
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, np.sqrt(innovation_var), size=n + burn_in)
    x = np.zeros_like(e)
    p = len(coeffs)
    for t in range(p, x.size):
        x[t] = sum(a * x[t - i - 1] for i, a in enumerate(coeffs)) + e[t]
    return x[burn_in:]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _acceptance.append((marker.args[0], rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(_acceptance):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}" + (f"  [{detail}]" if detail else ""))
