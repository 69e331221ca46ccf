import os
from pathlib import Path

import numpy as np
import pytest

from rlfs.dataset import BCCDS_COLUMNS, Dataset

HERE = Path(__file__).parent


def bccds_path():
    """Location of the real Breast Cancer Coimbra CSV, if the user supplied one."""
    env = os.environ.get("RLFS_BCCDS_CSV")
    if env:
        return Path(env)
    for cand in (HERE / "data" / "dataR2.csv", HERE.parent / "data" / "dataR2.csv"):
        if cand.exists():
            return cand
    return None


@pytest.fixture
def bccds_csv():
    path = bccds_path()
    if path is None or not path.exists():
        pytest.skip("BCCDS CSV not available (set RLFS_BCCDS_CSV or add tests/data/dataR2.csv)")
    return path


def make_signal_dataset(n=60, n_noise=3, seed=0):
    """Feature 0 separates the classes perfectly; the rest are uniform noise."""
    rng = np.random.default_rng(seed)
    y = np.tile([0, 1], n // 2)
    X = rng.uniform(size=(n, 1 + n_noise))
    X[:, 0] = np.where(y == 1, rng.uniform(0.6, 1.0, n), rng.uniform(0.0, 0.4, n))
    names = ("signal",) + tuple(f"noise{i}" for i in range(1, n_noise + 1))
    return Dataset(names, X, y)


def make_surrogate(seed=7):
    """116 x 9 synthetic table shaped like BCCDS (52 positive, 64 negative).

    Stand-in for tests that exercise scale and code paths, not for any
    paper number.
    """
    rng = np.random.default_rng(seed)
    y = np.array([1] * 52 + [0] * 64)
    rng.shuffle(y)
    X = rng.normal(size=(116, 9)) * 10 + 50
    X[:, 2] += y * 8
    X[:, 7] += y * 5
    X[:, 0] -= y * 4
    return Dataset(BCCDS_COLUMNS[:-1], X, y)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def dataset_to_csv(ds, path, label_column="Classification", labels=("1", "2")):
    rows = [[*map(repr, x), labels[int(lab)]] for x, lab in zip(ds.X.tolist(), ds.y)]
    return write_csv(path, list(ds.feature_names) + [label_column], rows)


@pytest.fixture
def signal_ds():
    return make_signal_dataset()


@pytest.fixture
def surrogate():
    return make_surrogate()


@pytest.fixture
def surrogate_csv(tmp_path, surrogate):
    return dataset_to_csv(surrogate, tmp_path / "surrogate.csv")


# --- one pass/fail line per acceptance criterion

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        detail = dict(item.user_properties).get("detail", "")
        if rep.outcome == "skipped" and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        _acceptance[(number, item.name)] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, _), (status, title, detail) in sorted(_acceptance.items()):
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
