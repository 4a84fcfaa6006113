"""Dataset container, CSV ingestion, stratified folding, and class rebalancing."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or invalid dataset operations."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with labels in {-1, +1} and stable row identities.

    ``row_ids`` survive fold splitting and undersampling so that noise masks,
    which are keyed by row id, remain meaningful on any subset.
    """

    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        row_ids = np.asarray(self.row_ids, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError(f"Dataset: features must be a nonempty 2-D matrix, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise DataError("Dataset: features contain NaN or infinite values")
        if labels.shape != (feats.shape[0],):
            raise DataError("Dataset: labels length does not match feature rows")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DataError("Dataset: labels must be -1 or +1")
        if row_ids.shape != (feats.shape[0],):
            raise DataError("Dataset: row_ids length does not match feature rows")
        if np.unique(row_ids).size != row_ids.size:
            raise DataError("Dataset: row_ids must be unique")
        names = self.feature_names
        if names is not None:
            names = tuple(names)
            if len(names) != feats.shape[1]:
                raise DataError("Dataset: feature_names length does not match feature columns")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "row_ids", _frozen(row_ids))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        """Rows at the given positional indices, row ids preserved."""
        idx = np.asarray(indices)
        return Dataset(
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            row_ids=self.row_ids[idx].copy(),
            feature_names=self.feature_names,
        )

    def column_names(self) -> tuple[str, ...]:
        if self.feature_names is not None:
            return self.feature_names
        return tuple(f"x{j}" for j in range(self.n_features))


def load_csv(path, label_column, positive_label: str) -> Dataset:
    """Load a comma-separated, headered file into a Dataset.

    ``label_column`` selects the label column by header name (str) or
    zero-based index (int).  Labels map to +1 iff the raw token equals
    ``positive_label``, else -1.  Every non-label cell must parse as a finite
    real number; rows with missing cells are rejected.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"load_csv: file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"load_csv: {path} is empty")
        header = [h.strip() for h in header]
        if isinstance(label_column, int):
            if not 0 <= label_column < len(header):
                raise DataError(f"load_csv: label column index {label_column} out of range for {len(header)} columns")
            label_idx = label_column
        else:
            try:
                label_idx = header.index(str(label_column))
            except ValueError:
                raise DataError(f"load_csv: label column {label_column!r} not in header {header}") from None
        feature_names = tuple(name for i, name in enumerate(header) if i != label_idx)
        if not feature_names:
            raise DataError("load_csv: no feature columns besides the label")

        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(f"load_csv: row {line_no} has {len(record)} cells, expected {len(header)}")
            values = []
            for col, cell in enumerate(record):
                if col == label_idx:
                    raw_labels.append(cell.strip())
                    continue
                token = cell.strip()
                name = header[col]
                if token == "":
                    raise DataError(f"load_csv: missing value at row {line_no}, column {name!r}")
                try:
                    x = float(token)
                except ValueError:
                    raise DataError(f"load_csv: unparsable cell {token!r} at row {line_no}, column {name!r}") from None
                if not np.isfinite(x):
                    raise DataError(f"load_csv: non-finite value {token!r} at row {line_no}, column {name!r}")
                values.append(x)
            rows.append(values)

    if not rows:
        raise DataError(f"load_csv: {path} has no data rows")
    distinct = set(raw_labels)
    if len(distinct) < 2:
        raise DataError(f"load_csv: fewer than 2 distinct labels (found {sorted(distinct)})")
    if positive_label not in distinct:
        raise DataError(f"load_csv: positive label {positive_label!r} never occurs (labels: {sorted(distinct)})")
    labels = np.array([1 if tok == positive_label else -1 for tok in raw_labels], dtype=np.int64)
    return Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=labels,
        row_ids=np.arange(len(rows), dtype=np.int64),
        feature_names=feature_names,
    )


def save_csv(dataset: Dataset, path, label_name: str = "label") -> None:
    """Write a Dataset to CSV with exact float round-trip (repr formatting)."""
    names = dataset.column_names()
    if label_name in names:
        raise DataError(f"save_csv: label column name {label_name!r} clashes with a feature name")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names) + [label_name])
        for i in range(dataset.n_rows):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic stratified fold assignment: fold index per row."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.min() < 0 or a.max() >= self.k:
            raise DataError("FoldPlan: assignments out of range")
        counts = np.bincount(a, minlength=self.k)
        if np.any(counts == 0):
            raise DataError("FoldPlan: every fold must be nonempty")
        object.__setattr__(self, "assignments", _frozen(a))

    def test_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments != fold)[0]


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Assign rows to k folds: seeded shuffle within each class, then round-robin.

    Deterministic for fixed (labels, k, seed); every fold receives a near-
    proportional share of each class.
    """
    n = dataset.n_rows
    if not 2 <= k <= n:
        raise DataError(f"stratified_kfold: need 2 <= k <= N, got k={k}, N={n}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    for cls in (-1, 1):
        idx = np.nonzero(dataset.labels == cls)[0]
        if idx.size < k:
            raise DataError(f"stratified_kfold: class {cls} has {idx.size} members, fewer than k={k}")
        perm = rng.permutation(idx)
        assignments[perm] = np.arange(perm.size) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def random_undersample(dataset: Dataset, seed: int) -> Dataset:
    """Subsample the majority class (seeded, without replacement) to minority size.

    Every minority-class row is retained; surviving rows keep their original
    order and row ids.  A balanced dataset is returned unchanged.
    """
    pos = np.nonzero(dataset.labels == 1)[0]
    neg = np.nonzero(dataset.labels == -1)[0]
    if pos.size == 0 or neg.size == 0:
        raise DataError("random_undersample: both classes must be present")
    if pos.size == neg.size:
        return dataset
    minority, majority = (pos, neg) if pos.size < neg.size else (neg, pos)
    rng = np.random.default_rng(seed)
    kept_majority = rng.choice(majority, size=minority.size, replace=False)
    keep = np.sort(np.concatenate([minority, kept_majority]))
    return dataset.subset(keep)
