"""Transaction CSV ingestion, preprocessing, splitting and synthetic data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TIME_COLUMN = "Time"
AMOUNT_COLUMN = "Amount"
LABEL_COLUMN = "Class"
PCA_COLUMNS = [f"V{i}" for i in range(1, 29)]
RAW_COLUMNS = [TIME_COLUMN, *PCA_COLUMNS, AMOUNT_COLUMN]
FEATURE_COLUMNS = [*PCA_COLUMNS, AMOUNT_COLUMN]


class DatasetError(ValueError):
    pass


def round_half_up(x: float) -> int:
    """Round to nearest integer with halves going up (``round`` uses banker's rounding)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise DatasetError(f"features must be a non-empty 2-D matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DatasetError(f"{y.shape[0] if y.ndim else 0} labels for {x.shape[0]} rows")
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
            raise DatasetError(f"row {bad} has a non-finite feature value")
        if not np.all((y == 0) | (y == 1)):
            bad = int(np.flatnonzero((y != 0) & (y != 1))[0])
            raise DatasetError(f"row {bad} has label {y[bad]}, expected 0 or 1")
        names = tuple(self.column_names) or tuple(f"x{i}" for i in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DatasetError(f"{len(names)} column names for {x.shape[1]} columns")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        """(normal, fraud) row counts."""
        fraud = int(self.labels.sum())
        return self.n - fraud, fraud

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.column_names)

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.column_names.index(name)]


def _parse_row(row: list[str], lineno: int, row_index: int) -> tuple[list[float], int]:
    if len(row) != len(RAW_COLUMNS) + 1:
        raise DatasetError(f"row {row_index} (line {lineno}): expected {len(RAW_COLUMNS) + 1} fields, got {len(row)}")
    try:
        values = [float(v) for v in row[:-1]]
    except ValueError as exc:
        raise DatasetError(f"row {row_index} (line {lineno}): {exc}") from None
    if not all(math.isfinite(v) for v in values):
        raise DatasetError(f"row {row_index} (line {lineno}): non-finite value")
    raw_label = row[-1].strip().strip('"')
    try:
        label = float(raw_label)
    except ValueError:
        raise DatasetError(f"row {row_index} (line {lineno}): label {raw_label!r} is not a number") from None
    if label not in (0.0, 1.0):
        raise DatasetError(f"row {row_index} (line {lineno}): label {raw_label!r} not in {{0, 1}}")
    return values, int(label)


def load_csv(path: str | Path, has_header: bool = True) -> LabeledDataset:
    """Read a ``Time,V1..V28,Amount,Class`` transaction file.

    Returns a 30-column dataset (Time..Amount) with labels from Class. Rows
    keep their file order; errors name the zero-based data row index.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    rows, labels = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        if has_header:
            header = next(reader, None)
            if header is None:
                raise DatasetError(f"{path} is empty")
            names = [h.strip().strip('"') for h in header]
            if names != [*RAW_COLUMNS, LABEL_COLUMN]:
                raise DatasetError(f"unexpected header in {path}: {','.join(names)}")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            values, label = _parse_row(row, reader.line_num, len(rows))
            rows.append(values)
            labels.append(label)
    if not rows:
        raise DatasetError(f"{path} has no data rows")
    return LabeledDataset(np.array(rows), np.array(labels), tuple(RAW_COLUMNS))


def load_table(path: str | Path) -> LabeledDataset:
    """Read any headered CSV whose last column is ``Class`` (e.g. preprocessed output)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1].strip().strip('"') != LABEL_COLUMN:
            raise DatasetError(f"{path}: header must end with {LABEL_COLUMN}")
        names = tuple(h.strip().strip('"') for h in header[:-1])
        rows, labels = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"row {len(rows)} (line {reader.line_num}): expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(float(row[-1]))
            except ValueError as exc:
                raise DatasetError(f"row {len(rows)} (line {reader.line_num}): {exc}") from None
    if not rows:
        raise DatasetError(f"{path} has no data rows")
    return LabeledDataset(np.array(rows), np.array(labels), names)


def write_csv(ds: LabeledDataset, path: str | Path) -> None:
    """Write ``ds`` with a header of its column names followed by Class."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.column_names, LABEL_COLUMN])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def preprocess(ds: LabeledDataset) -> LabeledDataset:
    """Drop Time and z-score Amount over the whole dataset."""
    names = list(ds.column_names)
    for required in (TIME_COLUMN, AMOUNT_COLUMN):
        if required not in names:
            raise DatasetError(f"preprocess needs a {required!r} column")
    amount = ds.column(AMOUNT_COLUMN)
    std = amount.std(ddof=1) if ds.n > 1 else 0.0
    if not std > 0:
        raise DatasetError("Amount column has zero standard deviation")
    x = ds.features.copy()
    x[:, names.index(AMOUNT_COLUMN)] = (amount - amount.mean()) / std
    keep = [i for i, name in enumerate(names) if name != TIME_COLUMN]
    return LabeledDataset(x[:, keep], ds.labels, tuple(names[i] for i in keep))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise DatasetError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


def _stratified_quota(counts: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder allocation of ``total`` test rows across classes."""
    exact = counts * (total / counts.sum())
    quota = np.floor(exact).astype(int)
    order = np.argsort(-(exact - quota), kind="stable")
    for i in order[: total - quota.sum()]:
        quota[i] += 1
    return quota


def split_indices(ds: LabeledDataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    if ds.n < 2:
        raise DatasetError("need at least 2 rows to split")
    n_test = round_half_up(ds.n * spec.test_fraction)
    n_test = min(max(n_test, 1), ds.n - 1)
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(ds.n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])
    classes = [np.flatnonzero(ds.labels == c) for c in (0, 1)]
    if any(len(c) == 0 for c in classes):
        raise DatasetError("stratified split needs at least one row of each class")
    quota = _stratified_quota(np.array([len(c) for c in classes]), n_test)
    test = np.concatenate([rng.permutation(members)[:q] for members, q in zip(classes, quota)])
    mask = np.zeros(ds.n, dtype=bool)
    mask[test] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded random train/test partition; rows keep their original relative order."""
    train_idx, test_idx = split_indices(ds, spec)
    return ds.subset(train_idx), ds.subset(test_idx)


def generate_synthetic(
    n: int,
    minority_fraction: float,
    d: int = 29,
    separation: float = 2.5,
    seed: int = 0,
) -> LabeledDataset:
    """Two unit-covariance Gaussian clusters whose means are ``separation`` apart.

    Normal rows are centred at the origin; fraud rows are shifted along the
    all-ones diagonal. With ``d == 29`` the columns are named like the
    preprocessed transaction features (V1..V28, Amount).
    """
    if n < 2:
        raise DatasetError("n must be at least 2")
    if not 0 < minority_fraction < 0.5:
        raise DatasetError("minority_fraction must be in (0, 0.5)")
    if d < 1:
        raise DatasetError("d must be at least 1")
    if separation < 0:
        raise DatasetError("separation must be non-negative")
    n_minority = round_half_up(n * minority_fraction)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    labels = np.zeros(n, dtype=np.int64)
    fraud = rng.choice(n, size=n_minority, replace=False)
    labels[fraud] = 1
    x[fraud] += separation / math.sqrt(d)
    names = tuple(FEATURE_COLUMNS) if d == len(FEATURE_COLUMNS) else tuple(f"x{i}" for i in range(d))
    return LabeledDataset(x, labels, names)


def as_transactions(ds: LabeledDataset) -> LabeledDataset:
    """Prepend a Time column (row index in seconds) so a 29-feature set matches the raw file schema."""
    if ds.column_names != tuple(FEATURE_COLUMNS):
        raise DatasetError("expected columns V1..V28, Amount")
    x = np.column_stack([np.arange(ds.n, dtype=np.float64), ds.features])
    return LabeledDataset(x, ds.labels, tuple(RAW_COLUMNS))
