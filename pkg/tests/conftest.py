import numpy as np
import pytest

from fraud_dae.dataset import FEATURE_COLUMNS, LabeledDataset

# (criterion, passed, detail) lines printed after the run by the acceptance module
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{status:<4} {name}: {detail}")


def low_rank_rows(n, rng, basis, jitter=0.05):
    """Rows near a low-dimensional subspace: latent Gaussian mapped through ``basis`` plus jitter."""
    return rng.standard_normal((n, basis.shape[0])) @ basis + jitter * rng.standard_normal((n, basis.shape[1]))


def make_dataset(n_normal, n_fraud, d=29, seed=0, shift=3.0):
    rng = np.random.default_rng(seed)
    x = np.vstack([rng.standard_normal((n_normal, d)), rng.standard_normal((n_fraud, d)) + shift / np.sqrt(d)])
    y = np.r_[np.zeros(n_normal, int), np.ones(n_fraud, int)]
    names = tuple(FEATURE_COLUMNS) if d == 29 else ()
    return LabeledDataset(x, y, names)


def write_raw_csv(path, rows, header=True):
    """Write Time,V1..V28,Amount,Class rows given as lists of values."""
    from fraud_dae.dataset import LABEL_COLUMN, RAW_COLUMNS

    lines = [",".join([*RAW_COLUMNS, LABEL_COLUMN])] if header else []
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def raw_row(rng, label=0, time=0.0):
    return [time, *rng.standard_normal(28).round(6), round(float(rng.uniform(1, 500)), 2), label]
