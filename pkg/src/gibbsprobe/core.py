"""Core numeric and dataset types.

Everything downstream (models, probing energies, samplers) consumes the
types defined here. All containers are immutable after construction and
hold float64 arrays, so they can be shared freely across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DimensionError, EncodingError, SpecError

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})

NUMERIC = "numeric"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Temperature:
    """Strictly positive temperature for Gibbs distributions."""

    tau: float

    def __post_init__(self):
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise SpecError(f"temperature must be a positive finite real, got {self.tau}")

    def __float__(self) -> float:
        return float(self.tau)


def as_temperature(tau) -> float:
    """Validate and return a plain positive float temperature."""
    return float(Temperature(float(tau)))


@dataclass(frozen=True)
class DataPoint:
    """A single encoded sample: feature vector plus optional label."""

    features: np.ndarray
    label: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen_array(self.features))
        if self.features.ndim != 1:
            raise DimensionError("DataPoint features must be a flat vector")


@dataclass(frozen=True)
class ColumnCodec:
    """How one raw column maps into the encoded feature matrix.

    ``start``/``stop`` delimit the encoded columns this raw column owns.
    Categorical columns own one indicator column per category; numeric and
    ordinal columns own a single column.
    """

    name: str
    kind: str
    start: int
    stop: int
    categories: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, ORDINAL, CATEGORICAL):
            raise SpecError(f"unknown column kind {self.kind!r}")
        if self.kind in (ORDINAL, CATEGORICAL) and not self.categories:
            raise SpecError(f"column {self.name!r} of kind {self.kind} needs categories")
        if self.kind == CATEGORICAL and self.stop - self.start != len(self.categories):
            raise SpecError(f"column {self.name!r}: indicator block size mismatch")


@dataclass(frozen=True)
class Dataset:
    """An in-memory encoded dataset.

    ``X`` is the (N, d) feature matrix in model units (post-encoding),
    ``y`` the optional label vector (class indices or real values).
    ``bounds`` is an optional (d, 2) array of per-feature [lo, hi] limits
    that every row must respect.
    """

    X: np.ndarray
    y: Optional[np.ndarray] = None
    feature_names: tuple[str, ...] = ()
    encoding_map: Optional[tuple[ColumnCodec, ...]] = None
    bounds: Optional[np.ndarray] = None
    n_classes: Optional[int] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise DimensionError("Dataset.X must be a 2-d array")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{i}" for i in range(X.shape[1])))
        if len(self.feature_names) != X.shape[1]:
            raise DimensionError("feature_names length must equal the feature dimension")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.y is not None:
            y = np.array(self.y, dtype=float)
            if y.shape != (X.shape[0],):
                raise DimensionError("y must be a vector with one entry per row of X")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)
        if self.n_classes is not None:
            if self.y is None:
                raise SpecError("n_classes given but no labels present")
            labels = self.y
            if np.any(labels != np.round(labels)) or labels.min() < 0 or labels.max() > self.n_classes - 1:
                raise SpecError(f"class labels must lie in 0..{self.n_classes - 1}")
        if self.bounds is not None:
            b = np.array(self.bounds, dtype=float)
            if b.shape != (X.shape[1], 2):
                raise DimensionError("bounds must have shape (d, 2)")
            if np.any(b[:, 0] > b[:, 1]):
                raise SpecError("bounds must satisfy lo <= hi per feature")
            if X.shape[0] and (np.any(X < b[:, 0]) or np.any(X > b[:, 1])):
                raise SpecError("training points must respect the declared bounds")
            b.setflags(write=False)
            object.__setattr__(self, "bounds", b)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def point(self, i: int) -> DataPoint:
        label = None if self.y is None else float(self.y[i])
        return DataPoint(self.X[i], label)

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[DataPoint]:
        return (self.point(i) for i in range(self.n))

    @property
    def points(self) -> tuple[DataPoint, ...]:
        return tuple(self)

    def labels_int(self) -> np.ndarray:
        if self.y is None:
            raise SpecError("dataset has no labels")
        return self.y.astype(int)

    def with_bounds(self, bounds) -> "Dataset":
        return Dataset(self.X, self.y, self.feature_names, self.encoding_map,
                       bounds, self.n_classes)


@dataclass(frozen=True)
class ParamVector:
    """A flat parameter vector with named segments mapping back to model structure."""

    theta: np.ndarray
    layout: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen_array(self.theta))
        if self.theta.ndim != 1:
            raise DimensionError("ParamVector.theta must be flat")
        if self.layout:
            total = sum(length for _, length in self.layout)
            if total != self.theta.size:
                raise DimensionError(
                    f"layout lengths sum to {total}, parameter vector has {self.theta.size}")

    def segment(self, name: str) -> np.ndarray:
        offset = 0
        for seg_name, length in self.layout:
            if seg_name == name:
                return self.theta[offset:offset + length]
            offset += length
        raise KeyError(name)

    @property
    def size(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class ColumnSpec:
    """Declares how one raw column should be treated during encoding."""

    name: str
    kind: str
    categories: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, ORDINAL, CATEGORICAL):
            raise SpecError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in (ORDINAL, CATEGORICAL):
            if not self.categories:
                raise SpecError(f"column {self.name!r}: {self.kind} columns need a category set")
            object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))


@dataclass(frozen=True)
class TableSchema:
    """Column descriptions for a raw table, plus the optional label column."""

    columns: tuple[ColumnSpec, ...]
    label_column: Optional[str] = None
    label_categories: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SpecError("duplicate column names in schema")
        if self.label_column is not None and self.label_column in names:
            raise SpecError("label column must not also appear among feature columns")
        if self.label_categories is not None:
            object.__setattr__(self, "label_categories",
                               tuple(str(c) for c in self.label_categories))

    def feature_dim(self) -> int:
        dim = 0
        for col in self.columns:
            dim += len(col.categories) if col.kind == CATEGORICAL else 1
        return dim


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and np.isnan(value):
        return True
    return isinstance(value, str) and value.strip().lower() in MISSING_TOKENS


def _parse_numeric(value, row: int, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise EncodingError(f"row {row}, column {name!r}: cannot parse {value!r} as a number")


def one_hot_encode(
    header: Sequence[str],
    rows: Sequence[Sequence],
    schema: TableSchema,
) -> Dataset:
    """Encode a raw mixed-type table into a numeric Dataset.

    Categorical columns expand to one indicator column per category, ordinal
    columns map to their category index, numeric columns pass through. Rows
    with missing values are dropped (and counted in the log). The returned
    Dataset carries an encoding map so samples can be decoded back.

    Raises EncodingError for unknown category values, naming row and column.
    """
    header = [str(h) for h in header]
    col_index = {}
    for col in schema.columns:
        if col.name not in header:
            raise EncodingError(f"schema column {col.name!r} not found in table header")
        col_index[col.name] = header.index(col.name)
    label_idx = None
    if schema.label_column is not None:
        if schema.label_column not in header:
            raise EncodingError(f"label column {schema.label_column!r} not found in header")
        label_idx = header.index(schema.label_column)

    codecs: list[ColumnCodec] = []
    names: list[str] = []
    offset = 0
    for col in schema.columns:
        if col.kind == CATEGORICAL:
            width = len(col.categories)
            names.extend(f"{col.name}={cat}" for cat in col.categories)
        else:
            width = 1
            names.append(col.name)
        codecs.append(ColumnCodec(col.name, col.kind, offset, offset + width, col.categories))
        offset += width

    features: list[np.ndarray] = []
    labels: list[float] = []
    dropped = 0
    for r, raw in enumerate(rows):
        if len(raw) != len(header):
            raise EncodingError(f"row {r}: expected {len(header)} cells, got {len(raw)}")
        if any(_is_missing(raw[col_index[c.name]]) for c in schema.columns) or (
                label_idx is not None and _is_missing(raw[label_idx])):
            dropped += 1
            continue
        vec = np.zeros(offset)
        for col, codec in zip(schema.columns, codecs):
            value = raw[col_index[col.name]]
            if col.kind == NUMERIC:
                vec[codec.start] = _parse_numeric(value, r, col.name)
            elif col.kind == ORDINAL:
                key = str(value).strip()
                if key not in col.categories:
                    raise EncodingError(f"row {r}, column {col.name!r}: unknown category {key!r}")
                vec[codec.start] = col.categories.index(key)
            else:
                key = str(value).strip()
                if key not in col.categories:
                    raise EncodingError(f"row {r}, column {col.name!r}: unknown category {key!r}")
                vec[codec.start + col.categories.index(key)] = 1.0
        features.append(vec)
        if label_idx is not None:
            value = raw[label_idx]
            if schema.label_categories is not None:
                key = str(value).strip()
                if key not in schema.label_categories:
                    raise EncodingError(
                        f"row {r}, column {schema.label_column!r}: unknown category {key!r}")
                labels.append(float(schema.label_categories.index(key)))
            else:
                labels.append(_parse_numeric(value, r, schema.label_column))

    if dropped:
        logger.info("one_hot_encode: dropped %d row(s) with missing values", dropped)

    X = np.array(features, dtype=float).reshape(len(features), offset)
    y = np.array(labels, dtype=float) if label_idx is not None else None
    n_classes = len(schema.label_categories) if schema.label_categories is not None else None
    return Dataset(X, y, tuple(names), tuple(codecs), None, n_classes)


def decode_sample(x: np.ndarray, encoding_map: Sequence[ColumnCodec]) -> dict:
    """Map an encoded feature vector back to a raw-valued row.

    Each categorical block decodes to the category of its maximal coordinate
    (ties broken by the lowest category index). Ordinal columns decode to the
    category whose index is nearest, clipped to the valid range. Numeric
    columns pass through. Total function: any finite vector decodes.
    """
    x = np.asarray(x, dtype=float)
    dim = max(codec.stop for codec in encoding_map) if encoding_map else 0
    if x.shape != (dim,):
        raise DimensionError(f"expected a vector of dimension {dim}, got shape {x.shape}")
    row = {}
    for codec in encoding_map:
        block = x[codec.start:codec.stop]
        if codec.kind == CATEGORICAL:
            row[codec.name] = codec.categories[int(np.argmax(block))]
        elif codec.kind == ORDINAL:
            idx = int(np.clip(np.round(block[0]), 0, len(codec.categories) - 1))
            row[codec.name] = codec.categories[idx]
        else:
            row[codec.name] = float(block[0])
    return row


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Read an RFC-4180 CSV file with a header row."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EncodingError(f"{path}: empty CSV, header row required")
        rows = [row for row in reader if row]
    return header, rows
