"""Visual similarity from inference: score each source output as a detector.

Target samples are pushed through the frozen source classifier head; source
output j "fires" on a sample when it is the argmax.  The similarity between
target class i and source class j is the F-score of output j treated as a
binary detector of class i over those predictions.

This module also defines ``ClassifierHead``, the weight-matrix-plus-bias
bundle shared by the whole toolkit, and its on-disk packing (bias stored as
the last matrix column).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrixio import (
    FeatureDataset,
    NonFiniteError,
    PredictionRecord,
    ShapeError,
    read_matrix,
    write_matrix,
)

__all__ = [
    "ClassifierHead",
    "predict_source",
    "fscore",
    "inference_similarity_matrix",
    "read_head",
    "write_head",
]


@dataclass
class ClassifierHead:
    """Linear classifier: ``weights`` (n_classes, dim) and ``bias`` (n_classes,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or min(self.weights.shape) < 1:
            raise ShapeError(f"weights must be 2-D and non-empty, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match "
                f"{self.weights.shape[0]} classes"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NonFiniteError("classifier head contains non-finite values")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.weights.copy(), self.bias.copy())


def predict_source(head: ClassifierHead, features: FeatureDataset) -> list[PredictionRecord]:
    """Argmax of ``W x + b`` per sample; ties resolve to the lowest index.

    Sample ids are the 0-based positions within the dataset.
    """
    if features.dim != head.dim:
        raise ShapeError(
            f"feature dim {features.dim} does not match head dim {head.dim}"
        )
    logits = features.features @ head.weights.T + head.bias
    predicted = np.argmax(logits, axis=1)  # np.argmax takes the first maximum
    return [
        PredictionRecord(str(i), int(features.targets[i]), int(predicted[i]))
        for i in range(features.n_samples)
    ]


def fscore(tp: int, fp: int, fn: int) -> float:
    """Balanced F1 from detector counts; defined as 0 whenever tp == 0."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError(f"counts must be non-negative, got tp={tp} fp={fp} fn={fn}")
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def inference_similarity_matrix(
    predictions: list[PredictionRecord], n_targets: int, n_sources: int
) -> np.ndarray:
    """F-score of each source output against each target class.

    A sample with target class i and predicted source j counts as a true
    positive for cell (i, j), a false positive for (i', j) with i' != i, and
    a false negative for (i, j') with j' != j.  Returns an
    (n_targets, n_sources) matrix with entries in [0, 1].
    """
    if not predictions:
        raise ValueError("prediction list is empty")
    if n_targets < 1 or n_sources < 1:
        raise ValueError("n_targets and n_sources must be >= 1")

    counts = np.zeros((n_targets, n_sources), dtype=np.int64)
    for r in predictions:
        if not 0 <= r.target_class < n_targets:
            raise ValueError(
                f"target_class {r.target_class} out of range for {n_targets} targets"
            )
        if not 0 <= r.predicted_source < n_sources:
            raise ValueError(
                f"predicted_source {r.predicted_source} out of range for {n_sources} sources"
            )
        counts[r.target_class, r.predicted_source] += 1

    per_target = counts.sum(axis=1)  # samples of class i
    per_source = counts.sum(axis=0)  # samples predicted as j
    sim = np.zeros((n_targets, n_sources), dtype=np.float64)
    for i in range(n_targets):
        for j in range(n_sources):
            tp = int(counts[i, j])
            sim[i, j] = fscore(tp, int(per_source[j]) - tp, int(per_target[i]) - tp)
    return sim


# ---------------------------------------------------------------------------
# head files: an (n_classes, dim + 1) matrix with the bias in the last column

_HEAD_COMMENT = "classifier head: one row per class, feature weights then bias in the last column"


def write_head(head: ClassifierHead, path: str) -> None:
    packed = np.column_stack([head.weights, head.bias])
    write_matrix(packed, path, comment=_HEAD_COMMENT)


def read_head(path: str) -> ClassifierHead:
    packed = read_matrix(path)
    if packed.shape[1] < 2:
        raise ShapeError(
            f"{path}: head matrix needs >= 2 columns (weights + bias), got {packed.shape}"
        )
    return ClassifierHead(packed[:, :-1].copy(), packed[:, -1].copy())
