"""Build a target classifier head from a source head and a similarity matrix.

Each target row is a convex combination of the most similar source rows:
the top-K similarity scores are normalized to sum to one and used as
combination coefficients for both the weight rows and the biases.  Targets
whose similarity row is all zeros fall back to a seeded Xavier-uniform row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .infersim import ClassifierHead
from .matrixio import NonFiniteError, ShapeError
from .taxonomy import TargetType

__all__ = [
    "Neighbor",
    "InitSpec",
    "select_neighbors",
    "combine",
    "xavier_init",
    "build_target_head",
]


@dataclass(frozen=True)
class Neighbor:
    """One selected source class with its raw score and normalized weight."""

    source: int
    similarity: float
    coefficient: float


@dataclass
class InitSpec:
    """Neighbor counts per target type plus the fallback RNG seed.

    The per-type counts let broad or unrelated targets pool more source rows
    than near-duplicate ones.
    """

    k_disjoint: int = 5
    k_included: int = 2
    k_inclusive: int = 3
    fallback_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("k_disjoint", "k_included", "k_inclusive"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")

    def k_for(self, target_type: TargetType) -> int:
        if target_type is TargetType.INCLUDED:
            return self.k_included
        if target_type is TargetType.INCLUSIVE:
            return self.k_inclusive
        return self.k_disjoint

    def max_k(self) -> int:
        return max(self.k_disjoint, self.k_included, self.k_inclusive)


def _check_similarity(sim: np.ndarray) -> np.ndarray:
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2 or min(sim.shape) < 1:
        raise ShapeError(f"similarity matrix must be 2-D and non-empty, got {sim.shape}")
    if not np.all(np.isfinite(sim)):
        raise NonFiniteError("similarity matrix contains non-finite values")
    if np.any(sim < 0.0) or np.any(sim > 1.0):
        raise ValueError("similarity entries must lie in [0, 1]")
    return sim


def select_neighbors(sim: np.ndarray, target_index: int, k: int) -> list[Neighbor]:
    """Top-k sources for one target row, zeros dropped, scores normalized.

    Sorting is stable on descending score, so ties keep the lowest source
    index first.  The result can hold fewer than k entries (zero scores are
    never selected) and is empty when the whole row is zero.
    """
    sim = _check_similarity(sim)
    n_targets, n_sources = sim.shape
    if not 0 <= target_index < n_targets:
        raise IndexError(f"target index {target_index} out of range for {n_targets} rows")
    if not 1 <= k <= n_sources:
        raise ValueError(f"k must be in [1, {n_sources}], got {k}")

    row = sim[target_index]
    order = np.argsort(-row, kind="stable")[:k]
    picked = [j for j in order if row[j] > 0.0]
    total = float(sum(float(row[j]) for j in picked))
    return [
        Neighbor(int(j), float(row[j]), float(row[j]) / total)
        for j in picked
    ]


def combine(head: ClassifierHead, neighbors: list[Neighbor]) -> tuple[np.ndarray, float]:
    """Weighted sum of source rows and biases under the given coefficients.

    A single neighbor with coefficient 1.0 returns a bit-exact copy of its
    source row.
    """
    if not neighbors:
        raise ValueError("cannot combine an empty neighbor list")
    for nb in neighbors:
        if not 0 <= nb.source < head.n_classes:
            raise IndexError(
                f"neighbor source {nb.source} out of range for {head.n_classes} classes"
            )
    if len(neighbors) == 1 and neighbors[0].coefficient == 1.0:
        only = neighbors[0]
        return head.weights[only.source].copy(), float(head.bias[only.source])
    row = np.zeros(head.dim, dtype=np.float64)
    bias = 0.0
    for nb in neighbors:
        row += nb.coefficient * head.weights[nb.source]
        bias += nb.coefficient * float(head.bias[nb.source])
    return row, bias


def xavier_init(n_classes: int, dim: int, seed: int) -> ClassifierHead:
    """Xavier-uniform weights on [-a, a] with a = sqrt(6 / (n + d)), zero bias."""
    if n_classes < 1 or dim < 1:
        raise ValueError("n_classes and dim must be >= 1")
    bound = float(np.sqrt(6.0 / (n_classes + dim)))
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-bound, bound, size=(n_classes, dim))
    return ClassifierHead(weights, np.zeros(n_classes, dtype=np.float64))


def build_target_head(
    source_head: ClassifierHead,
    sim: np.ndarray,
    target_types: list[TargetType],
    spec: InitSpec | None = None,
) -> tuple[ClassifierHead, list[list[Neighbor]]]:
    """Construct the full target head, one combined row per target class.

    ``sim`` has one row per target and one column per source class of
    ``source_head``; ``target_types`` picks the per-row neighbor count from
    ``spec``.  Rows with no positive similarity are drawn from a single
    Xavier-initialized head seeded with ``spec.fallback_seed``.  Returns the
    head together with the per-target neighbor selections (empty list for
    fallback rows).
    """
    if spec is None:
        spec = InitSpec()
    sim = _check_similarity(sim)
    n_targets, n_sources = sim.shape
    if n_sources != source_head.n_classes:
        raise ShapeError(
            f"similarity has {n_sources} source columns but the head has "
            f"{source_head.n_classes} classes"
        )
    if len(target_types) != n_targets:
        raise ShapeError(
            f"{len(target_types)} target types for {n_targets} similarity rows"
        )
    if spec.max_k() > n_sources:
        raise ValueError(
            f"neighbor count {spec.max_k()} exceeds the {n_sources} available sources"
        )

    weights = np.empty((n_targets, source_head.dim), dtype=np.float64)
    bias = np.empty(n_targets, dtype=np.float64)
    selections: list[list[Neighbor]] = []
    fallback: ClassifierHead | None = None
    for i in range(n_targets):
        neighbors = select_neighbors(sim, i, spec.k_for(target_types[i]))
        selections.append(neighbors)
        if neighbors:
            weights[i], bias[i] = combine(source_head, neighbors)
        else:
            if fallback is None:
                fallback = xavier_init(n_targets, source_head.dim, spec.fallback_seed)
            weights[i] = fallback.weights[i]
            bias[i] = fallback.bias[i]
    return ClassifierHead(weights, bias), selections
