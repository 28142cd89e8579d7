"""Dataset loading, normalization, and row-removed neighbor views.

The normalization is a fixed two-stage transform: each feature is
standardized to mean 0 / variance 1 (population variance), then every row
is divided by the largest row L2 norm so the data lives in the unit ball
with at least one row exactly on its surface.  Neighbor views reuse the
base normalization unchanged; they are never re-normalized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError

ROW_NORM_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RawTable:
    """Parsed delimited input: numeric feature columns plus a raw label column."""

    features: np.ndarray  # (n, d) float64
    raw_labels: tuple[str, ...]
    feature_names: tuple[str, ...]
    label_name: str
    positive_label: str

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(self.features))
        if self.features.ndim != 2:
            raise DataError("feature table must be 2-dimensional")
        if self.n != len(self.raw_labels):
            raise DataError("feature rows and labels disagree in length")
        if self.n < 2:
            raise DataError(f"need at least 2 rows, got {self.n}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def head(self, rows: int) -> "RawTable":
        """First `rows` rows, in file order."""
        if rows >= self.n:
            return self
        return RawTable(
            features=self.features[:rows].copy(),
            raw_labels=self.raw_labels[:rows],
            feature_names=self.feature_names,
            label_name=self.label_name,
            positive_label=self.positive_label,
        )


@dataclass(frozen=True)
class NormMeta:
    """Recorded transform: standardization constants plus unit-ball divisor.

    `apply` re-creates the exact training transform (same arithmetic, same
    order of operations), so applying it to the training table reproduces
    the normalized features bit for bit.
    """

    mean: np.ndarray  # (d,)
    std: np.ndarray  # (d,)
    max_row_norm: float

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(self.mean))
        object.__setattr__(self, "std", _readonly(self.std))

    def apply(self, features: np.ndarray) -> np.ndarray:
        standardized = (np.asarray(features, dtype=np.float64) - self.mean) / self.std
        return standardized / self.max_row_norm


@dataclass(frozen=True)
class Dataset:
    """Normalized features in the unit ball with labels in {-1, +1}."""

    features: np.ndarray  # (n, d), every row |x| <= 1
    labels: np.ndarray  # (n,), entries -1.0 or +1.0
    norm_meta: NormMeta

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(self.features))
        object.__setattr__(self, "labels", _readonly(self.labels))
        norms = np.linalg.norm(self.features, axis=1)
        if norms.size and norms.max() > 1.0 + ROW_NORM_TOL:
            raise DataError("normalized rows must lie in the unit ball")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NeighborView:
    """The base dataset with one row logically removed.

    Construction is O(1); the reduced arrays are materialized lazily when a
    computation asks for them.  The base normalization is kept as-is.
    """

    base: Dataset
    removed_index: int

    def __post_init__(self):
        if not 0 <= self.removed_index < self.base.n:
            raise IndexError(
                f"row index {self.removed_index} out of range [0, {self.base.n})"
            )

    @property
    def features(self) -> np.ndarray:
        return np.delete(self.base.features, self.removed_index, axis=0)

    @property
    def labels(self) -> np.ndarray:
        return np.delete(self.base.labels, self.removed_index)

    @property
    def n(self) -> int:
        return self.base.n - 1

    @property
    def d(self) -> int:
        return self.base.d


def load_csv(
    path,
    feature_columns: list[str],
    label_column: str,
    positive_label: str,
    max_rows: int | None = None,
) -> RawTable:
    """Read a comma-delimited, UTF-8, header-first file into a RawTable.

    Raises ConfigurationError for missing columns and DataError for
    unparseable numeric cells (named by row and column) or too few rows.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, no header") from None
        header = [h.strip() for h in header]
        missing = [c for c in [*feature_columns, label_column] if c not in header]
        if missing:
            raise ConfigurationError(
                f"{path}: columns not found: {', '.join(missing)} "
                f"(available: {', '.join(header)})"
            )
        feat_idx = [header.index(c) for c in feature_columns]
        label_idx = header.index(label_column)

        rows: list[list[float]] = []
        labels: list[str] = []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(record)}"
                )
            values = []
            for col, j in zip(feature_columns, feat_idx):
                cell = record[j].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column '{col}' has non-numeric cell {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise DataError(
                        f"{path}:{lineno}: column '{col}' has non-finite cell {cell!r}"
                    )
                values.append(value)
            rows.append(values)
            labels.append(record[label_idx].strip())
            if max_rows is not None and len(rows) >= max_rows:
                break

    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 rows, got {len(rows)}")
    return RawTable(
        features=np.asarray(rows, dtype=np.float64),
        raw_labels=tuple(labels),
        feature_names=tuple(feature_columns),
        label_name=label_column,
        positive_label=positive_label,
    )


def normalize(raw: RawTable) -> Dataset:
    """Standardize each feature, then divide all rows by the max row norm.

    Labels equal to `raw.positive_label` map to +1, everything else to -1.
    Zero-variance features and all-zero data are rejected.
    """
    mean = raw.features.mean(axis=0)
    std = raw.features.std(axis=0)  # population variance: divide by n
    zero_var = np.flatnonzero(std == 0.0)
    if zero_var.size:
        names = ", ".join(raw.feature_names[j] for j in zero_var)
        raise DataError(f"zero-variance feature(s): {names}")

    standardized = (raw.features - mean) / std
    max_row_norm = float(np.linalg.norm(standardized, axis=1).max())
    if max_row_norm == 0.0:
        raise DataError("all rows are zero after standardization")

    meta = NormMeta(mean=mean, std=std, max_row_norm=max_row_norm)
    labels = np.where(
        np.asarray(raw.raw_labels) == raw.positive_label, 1.0, -1.0
    )
    return Dataset(features=meta.apply(raw.features), labels=labels, norm_meta=meta)


def neighbor(base: Dataset, i: int) -> NeighborView:
    """View of `base` with row `i` removed (no copy, no re-normalization)."""
    return NeighborView(base=base, removed_index=i)
