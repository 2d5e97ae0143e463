import numpy as np
import pytest

from dmelites.cvt import CentroidIndex, cvt_approximation

_criteria: dict[int, list[tuple[str, bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    _criteria.setdefault(number, []).append((title, report.passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        parts = _criteria[number]
        status = "PASS" if all(ok for _, ok in parts) else "FAIL"
        if len(parts) == 1:
            detail = parts[0][0]
        else:
            detail = "; ".join(f"{title} [{'pass' if ok else 'FAIL'}]" for title, ok in parts)
        terminalreporter.write_line(f"criterion {number:2d} {status}  {detail}")


@pytest.fixture(scope="session")
def centroids_1000() -> CentroidIndex:
    return cvt_approximation(1000, 2, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
