"""Readers and writers for the plain-text file formats used across the toolkit.

All numeric files are UTF-8 text, whitespace separated, with a one-line
header.  Floats are rendered with ``repr``, the shortest decimal string that
round-trips to the same IEEE-754 double, so read(write(x)) reproduces every
value bit for bit.  Lines starting with ``#`` and blank lines are ignored in
the whitespace-separated formats.

Formats:

* matrix file:   ``<rows> <cols>`` then ``rows`` lines of ``cols`` decimals
* label file:    one class per line, ``<index>\\t<label>\\t[synset_id]``
* prediction:    CSV with header ``sample_id,target_class,predicted_source``
* feature file:  ``<n_samples> <dim>`` then ``<target_class> <v1> ... <v_dim>``
  per sample
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FormatError",
    "HeaderError",
    "ShapeError",
    "NonFiniteError",
    "IndexingError",
    "LabelEntry",
    "LabelSet",
    "PredictionRecord",
    "FeatureDataset",
    "read_matrix",
    "write_matrix",
    "read_labels",
    "write_labels",
    "read_predictions",
    "write_predictions",
    "read_features",
    "write_features",
    "format_float",
]


class FormatError(ValueError):
    """A file does not conform to its documented format."""


class HeaderError(FormatError):
    """Missing or malformed header line."""


class ShapeError(FormatError):
    """Declared dimensions disagree with the actual number of values."""


class NonFiniteError(FormatError):
    """A NaN or infinity where only finite values are allowed."""


class IndexingError(FormatError):
    """Class indices with gaps, duplicates, or out-of-range references."""


def format_float(value: float) -> str:
    """Shortest decimal string that parses back to exactly ``value``."""
    text = repr(float(value))
    # integral floats round-trip without the trailing ".0"
    return text[:-2] if text.endswith(".0") else text


def _parse_float(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"{where}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise NonFiniteError(f"{where}: non-finite value {token!r}")
    return value


def _data_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    return [ln for ln in lines if ln and not ln.startswith("#")]


# ---------------------------------------------------------------------------
# matrix files


def read_matrix(path: str) -> np.ndarray:
    """Read a 2-D float64 matrix.

    Raises HeaderError for a bad dimension line, ShapeError when the declared
    shape disagrees with the number of values, NonFiniteError on NaN/Inf.
    """
    lines = _data_lines(path)
    if not lines:
        raise HeaderError(f"{path}: empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise HeaderError(f"{path}: expected '<rows> <cols>' header, got {lines[0]!r}")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise HeaderError(f"{path}: non-integer dimensions in header {lines[0]!r}") from None
    if rows < 1 or cols < 1:
        raise HeaderError(f"{path}: dimensions must be >= 1, got {rows}x{cols}")

    tokens: list[str] = []
    for ln in lines[1:]:
        tokens.extend(ln.split())
    if len(tokens) != rows * cols:
        raise ShapeError(
            f"{path}: header declares {rows}x{cols} = {rows * cols} values, "
            f"found {len(tokens)}"
        )
    values = [_parse_float(tok, path) for tok in tokens]
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def write_matrix(matrix: np.ndarray, path: str, comment: str | None = None) -> None:
    """Write a 2-D matrix; ``comment`` becomes a leading ``#`` line."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"matrix must be 2-D with positive shape, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix contains NaN or infinite values")
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(format_float(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# label files


@dataclass(frozen=True)
class LabelEntry:
    index: int
    label: str
    synset_id: str | None = None


@dataclass
class LabelSet:
    """Ordered class labels; indices are exactly 0..n-1 with no gaps."""

    entries: list[LabelEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        indices = [e.index for e in self.entries]
        if sorted(indices) != list(range(len(self.entries))):
            raise IndexingError(
                f"class indices must be exactly 0..{len(self.entries) - 1} "
                f"with no gaps or duplicates, got {sorted(indices)}"
            )
        for e in self.entries:
            if not e.label:
                raise FormatError(f"empty label at index {e.index}")
        self.entries = sorted(self.entries, key=lambda e: e.index)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    @property
    def synset_ids(self) -> list[str | None]:
        return [e.synset_id for e in self.entries]


def read_labels(path: str) -> LabelSet:
    entries = []
    for ln in _data_lines(path):
        parts = ln.split("\t")
        if len(parts) not in (2, 3):
            raise FormatError(
                f"{path}: expected '<index>\\t<label>\\t[synset_id]', got {ln!r}"
            )
        try:
            index = int(parts[0])
        except ValueError:
            raise FormatError(f"{path}: non-integer class index in {ln!r}") from None
        synset = parts[2] if len(parts) == 3 and parts[2] else None
        entries.append(LabelEntry(index=index, label=parts[1], synset_id=synset))
    if not entries:
        raise FormatError(f"{path}: empty label file")
    return LabelSet(entries)


def write_labels(labels: LabelSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in labels.entries:
            if "\t" in e.label or "\n" in e.label:
                raise FormatError(f"label may not contain tab/newline: {e.label!r}")
            if e.synset_id is not None:
                fh.write(f"{e.index}\t{e.label}\t{e.synset_id}\n")
            else:
                fh.write(f"{e.index}\t{e.label}\n")


# ---------------------------------------------------------------------------
# prediction files


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    target_class: int
    predicted_source: int


_PREDICTION_HEADER = ["sample_id", "target_class", "predicted_source"]


def read_predictions(path: str, source: LabelSet, target: LabelSet) -> list[PredictionRecord]:
    """Read prediction CSV rows, bounds-checked against both label sets."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderError(f"{path}: empty prediction file") from None
        if header != _PREDICTION_HEADER:
            raise HeaderError(
                f"{path}: expected header {','.join(_PREDICTION_HEADER)!r}, got {header!r}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}: expected 3 columns, got {row!r}")
            try:
                tgt, src = int(row[1]), int(row[2])
            except ValueError:
                raise FormatError(f"{path}: non-integer class index in {row!r}") from None
            if not 0 <= tgt < len(target):
                raise IndexingError(
                    f"{path}: target_class {tgt} out of range for {len(target)} target classes"
                )
            if not 0 <= src < len(source):
                raise IndexingError(
                    f"{path}: predicted_source {src} out of range for {len(source)} source classes"
                )
            records.append(PredictionRecord(row[0], tgt, src))
    return records


def write_predictions(records: list[PredictionRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_PREDICTION_HEADER)
        for r in records:
            writer.writerow([r.sample_id, r.target_class, r.predicted_source])


# ---------------------------------------------------------------------------
# feature files


@dataclass
class FeatureDataset:
    """Fixed-dimension feature vectors with 0-based integer class labels."""

    features: np.ndarray  # (n_samples, dim) float64
    targets: np.ndarray  # (n_samples,) int64

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.targets.shape != (self.features.shape[0],):
            raise ShapeError(
                f"targets shape {self.targets.shape} does not match "
                f"{self.features.shape[0]} samples"
            )
        if not np.all(np.isfinite(self.features)):
            raise NonFiniteError("feature vectors contain NaN or infinite values")
        if self.features.shape[0] and self.targets.min() < 0:
            raise IndexingError("negative target class index")

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


def read_features(path: str) -> FeatureDataset:
    lines = _data_lines(path)
    if not lines:
        raise HeaderError(f"{path}: empty feature file")
    header = lines[0].split()
    if len(header) != 2:
        raise HeaderError(f"{path}: expected '<n_samples> <dim>' header, got {lines[0]!r}")
    try:
        n, dim = int(header[0]), int(header[1])
    except ValueError:
        raise HeaderError(f"{path}: non-integer header {lines[0]!r}") from None
    if n < 1 or dim < 1:
        raise HeaderError(f"{path}: header values must be >= 1, got {n} {dim}")
    body = lines[1:]
    if len(body) != n:
        raise ShapeError(f"{path}: header declares {n} samples, found {len(body)} rows")
    features = np.empty((n, dim), dtype=np.float64)
    targets = np.empty(n, dtype=np.int64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != dim + 1:
            raise ShapeError(
                f"{path}: sample {i} has {len(parts) - 1} values, expected {dim}"
            )
        try:
            targets[i] = int(parts[0])
        except ValueError:
            raise FormatError(f"{path}: non-integer class index {parts[0]!r}") from None
        if targets[i] < 0:
            raise IndexingError(f"{path}: negative class index on sample {i}")
        for j, tok in enumerate(parts[1:]):
            features[i, j] = _parse_float(tok, f"{path} sample {i}")
    return FeatureDataset(features, targets)


def write_features(data: FeatureDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{data.n_samples} {data.dim}\n")
        for y, row in zip(data.targets, data.features):
            fh.write(str(int(y)) + " " + " ".join(format_float(v) for v in row) + "\n")


def ensure_parent_dir(path: str) -> None:
    """Create the parent directory of ``path`` if it does not exist."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
