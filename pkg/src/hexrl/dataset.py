"""Dataset handling: CSV ingestion, unit-box scaling, splits, oversampling.

All downstream code assumes features live in [0,1]^p with binary labels,
so scaling happens at load time and the (min, max) pairs are kept for
inverse mapping back to raw units.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    features: np.ndarray                  # (n, p), values in [0, 1]
    labels: np.ndarray                    # (n,), values in {0, 1}
    feature_names: list[str]
    scaling: list[tuple[float, float]]    # per-feature (min, max) of the raw data

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, p = self.features.shape
        if self.labels.shape != (n,):
            raise ValueError("label count must match row count")
        if len(self.feature_names) != p:
            raise ValueError("feature name count must match column count")
        if len(self.scaling) != p:
            raise ValueError("scaling pair count must match column count")
        if not set(np.unique(self.labels)) <= {0, 1}:
            raise ValueError("labels must be 0/1")
        if self.features.size and (
                self.features.min() < -1e-12 or self.features.max() > 1 + 1e-12):
            raise ValueError("features must be scaled into [0, 1]")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices],
                       list(self.feature_names), list(self.scaling))

    def inverse_scale(self, X: np.ndarray) -> np.ndarray:
        """Map unit-box rows back to raw feature units."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo = np.array([a for a, _ in self.scaling])
        hi = np.array([b for _, b in self.scaling])
        return lo + X * (hi - lo)


@dataclass
class SplitSpec:
    train_fraction: float = 0.70
    validation_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


class CsvFormatError(ValueError):
    """Raised when an input CSV cannot be parsed into a dataset."""


def scale_unit_box(raw: np.ndarray) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Min-max scale columns into [0,1]; zero-range columns map to 0.0."""
    raw = np.asarray(raw, dtype=float)
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    scaled = np.zeros_like(raw)
    nonzero = span > 0
    scaled[:, nonzero] = (raw[:, nonzero] - lo[nonzero]) / span[nonzero]
    return scaled, list(zip(lo.tolist(), hi.tolist()))


def load_csv(path, label_column: str) -> Dataset:
    """Load a comma-delimited file with a header row into a scaled Dataset."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty") from None
        header = [name.strip() for name in header]
        if label_column not in header:
            raise CsvFormatError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]

        rows, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}")
            values = []
            for col_no, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: row {row_no}, column {header[col_no]!r}: "
                        f"non-numeric cell {cell!r}") from None
                values.append(value)
            label = values.pop(label_idx)
            if label not in (0.0, 1.0):
                raise CsvFormatError(
                    f"{path}: row {row_no}: label must be 0 or 1, got {label}")
            rows.append(values)
            labels.append(int(label))

    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    scaled, scaling = scale_unit_box(np.array(rows))
    return Dataset(scaled, np.array(labels), feature_names, scaling)


def save_csv(dataset: Dataset, path, label_column: str = "label") -> None:
    """Write a dataset back out as CSV, features in raw (inverse-scaled) units."""
    raw = dataset.inverse_scale(dataset.features)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [label_column])
        for row, label in zip(raw, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def _partition_sizes(n: int, fractions: list[float]) -> list[int]:
    """Largest-remainder rounding of n into integer partition sizes."""
    quotas = [n * f for f in fractions]
    sizes = [int(np.floor(q)) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    for _ in range(n - sum(sizes)):
        i = int(np.argmax(remainders))
        sizes[i] += 1
        remainders[i] = -1.0
    return sizes


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded random train/validation/test partition (disjoint, exhaustive)."""
    if dataset.n < 10:
        raise ValueError(f"need at least 10 rows to split, got {dataset.n}")
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(dataset.n)
    sizes = _partition_sizes(dataset.n, [
        spec.train_fraction, spec.validation_fraction, spec.test_fraction])
    bounds = np.cumsum(sizes)
    train_idx = order[:bounds[0]]
    val_idx = order[bounds[0]:bounds[1]]
    test_idx = order[bounds[1]:]
    return dataset.subset(train_idx), dataset.subset(val_idx), dataset.subset(test_idx)


def smote_oversample(train: Dataset, k_neighbors: int = 5, seed: int = 0) -> Dataset:
    """Balance classes by synthesizing minority points between neighbors.

    Each synthetic point lies on the segment joining a minority point to
    one of its k nearest minority neighbors, so it is always a convex
    combination of two real minority rows.
    """
    counts = np.bincount(train.labels, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("oversampling needs both classes present")
    if counts[0] == counts[1]:
        return train

    minority_class = int(np.argmin(counts))
    minority = train.features[train.labels == minority_class]
    deficit = int(counts.max() - counts.min())

    if len(minority) <= k_neighbors:
        k = len(minority) - 1
        warnings.warn(
            f"minority class has {len(minority)} rows; reducing k_neighbors "
            f"from {k_neighbors} to {k}")
        k_neighbors = k
    if k_neighbors < 1:
        raise ValueError("minority class too small to interpolate")

    # k nearest minority neighbors of each minority row (self excluded)
    diffs = minority[:, None, :] - minority[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(axis=2))
    np.fill_diagonal(dists, np.inf)
    neighbor_idx = np.argsort(dists, axis=1)[:, :k_neighbors]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, len(minority), size=deficit)
    pick = rng.integers(0, k_neighbors, size=deficit)
    gaps = rng.random(deficit)
    synthetic = np.empty((deficit, train.p))
    for i, (b, c, g) in enumerate(zip(base, pick, gaps)):
        neighbor = minority[neighbor_idx[b, c]]
        synthetic[i] = minority[b] + g * (neighbor - minority[b])
    synthetic = np.clip(synthetic, 0.0, 1.0)

    features = np.vstack([train.features, synthetic])
    labels = np.concatenate([train.labels,
                             np.full(deficit, minority_class, dtype=int)])
    return Dataset(features, labels, list(train.feature_names), list(train.scaling))


def synth_boundary(kind: str, n: int, p: int, seed: int = 0) -> Dataset:
    """Uniform points in the unit box labeled by a known ground-truth rule.

    linear:  1 iff x1 + x2 > 1
    radial:  1 iff ||x - 0.5|| < 0.3
    xor:     1 iff exactly one of x1 > 0.5, x2 > 0.5
    """
    if n < 20:
        raise ValueError("need n >= 20")
    if p < 2:
        raise ValueError("need p >= 2")
    rng = np.random.default_rng(seed)
    X = rng.random((n, p))
    if kind == "linear":
        labels = (X[:, 0] + X[:, 1] > 1.0).astype(int)
    elif kind == "radial":
        labels = (np.linalg.norm(X - 0.5, axis=1) < 0.3).astype(int)
    elif kind == "xor":
        labels = ((X[:, 0] > 0.5) ^ (X[:, 1] > 0.5)).astype(int)
    else:
        raise ValueError(f"unknown boundary kind {kind!r}")
    names = [f"x{j + 1}" for j in range(p)]
    return Dataset(X, labels, names, [(0.0, 1.0)] * p)
