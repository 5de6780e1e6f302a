import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from searchgame import GameSpec  # noqa: E402
from searchgame import presets  # noqa: E402


def random_chain(rng, n, zeros=0.0):
    """Row-stochastic matrix; each entry is zeroed with probability ``zeros``."""
    P = rng.dirichlet(np.ones(n), size=n)
    if zeros:
        mask = rng.random((n, n)) < zeros
        mask[np.arange(n), rng.integers(0, n, size=n)] = False  # keep one entry per row
        P = np.where(mask, 0.0, P)
        P /= P.sum(axis=1, keepdims=True)
    return P


def random_belief(rng, n, zeros=0.0):
    p = rng.dirichlet(np.ones(n))
    if zeros:
        mask = rng.random(n) < zeros
        mask[rng.integers(0, n)] = False
        p = np.where(mask, 0.0, p)
        p /= p.sum()
    return p


def small_corpus():
    """Named specs with at most three states used by the oracle comparisons."""
    rng = np.random.default_rng(20240601)
    out = {
        "identity2": presets.identity(2).with_initial([0.3, 0.7]),
        "identity3": presets.identity(3),
        "uniform2": presets.uniform(2),
        "uniform3": presets.uniform(3),
        "figure2": presets.figure2(),
        "swap2": GameSpec.from_arrays([[[0, 1], [1, 0]]], [0.6, 0.4]),
        "collapse3": GameSpec.from_arrays([[[1, 0, 0]] * 3], [1 / 3] * 3),
        "cycle3": GameSpec.from_arrays([np.roll(np.eye(3), 1, axis=1)], [0.5, 0.3, 0.2]),
        "inhomogeneous": GameSpec.from_arrays(
            [np.eye(3), [[0.2, 0.5, 0.3], [0.1, 0.1, 0.8], [0.6, 0.2, 0.2]]],
            [0.2, 0.3, 0.5], repeat="cycle"),
        "hold_last": GameSpec.from_arrays(
            [[[0, 1], [1, 0]], [[0.5, 0.5], [0.5, 0.5]], [[0.9, 0.1], [0.3, 0.7]]],
            [0.8, 0.2], repeat="hold_last"),
    }
    for k in range(6):
        n = 2 + k % 2
        out[f"random{k}"] = GameSpec.from_arrays(
            [random_chain(rng, n, zeros=0.3 * (k % 3))], random_belief(rng, n, zeros=0.3 * (k % 2)))
    return out


@pytest.fixture(scope="session")
def corpus():
    return small_corpus()


@pytest.fixture(params=["numba", "numpy"], scope="module")
def backend(request):
    """Run the requesting module under both kernel backends."""
    from searchgame import kernels

    if request.param == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    with kernels.use_backend(request.param):
        yield request.param


_criteria: dict[int, tuple[str, bool]] = {}


def pytest_runtest_logreport(report):
    # the call phase decides, but a setup error or failure in any phase counts as FAIL
    mark = getattr(report, "criterion", None)
    if mark is None:
        return
    number, title = mark
    ok = report.passed or (report.when != "call" and not report.failed)
    prev = _criteria.get(number, (title, True))[1]
    if report.when == "call" or not ok:
        _criteria[number] = (title, prev and ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
