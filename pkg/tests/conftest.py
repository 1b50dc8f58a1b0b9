import numpy as np
import pytest

from hsilbp.hsidata import LabelField
from hsilbp.synthgen import SceneSpec, gen_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_scene():
    spec = SceneSpec(height=32, width=32, bands=16, classes=3, noise_sigma=0.3, seed=7)
    return gen_scene(spec)


def random_tree_mask(rng, shape=(5, 5), max_nodes=12):
    """Grow a pixel set whose 4-adjacency graph stays a tree."""
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    mask[rng.integers(h), rng.integers(w)] = True
    target = int(rng.integers(1, max_nodes + 1))
    while mask.sum() < target:
        cand = []
        for r in range(h):
            for c in range(w):
                if mask[r, c]:
                    continue
                n = sum(mask[rr, cc] for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                        if 0 <= rr < h and 0 <= cc < w)
                if n == 1:
                    cand.append((r, c))
        if not cand:
            break
        r, c = cand[rng.integers(len(cand))]
        mask[r, c] = True
    return mask


def random_unary(rng, n, M):
    u = rng.uniform(0.05, 1.0, size=(n, M))
    return u / u.sum(axis=1, keepdims=True)


def label_field(grid, M=None):
    grid = np.asarray(grid)
    return LabelField(grid, M or int(grid.max()))


# -- acceptance summary -----------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        prev = _CRITERIA.get(key)
        if prev and prev[1] == "FAIL":
            status = "FAIL"  # a parametrized criterion passes only if every variant does
        _CRITERIA[key] = (mark.args[1], status, getattr(item, "criterion_note", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        title, status, note = _CRITERIA[key]
        line = f"[{status}] criterion {key}: {title}"
        terminalreporter.write_line(line + (f"  ({note})" if note else ""))
