"""Label similarity through averaged word embeddings and cosine.

A class label is tokenized on commas, whitespace, hyphens, and underscores,
lowercased, and embedded as the mean vector of its in-vocabulary tokens
(occurrence-weighted, so a repeated word counts twice).  Tokens missing from
the vocabulary are skipped; a label with no known token embeds to the zero
vector and is similar to nothing.  Negative cosines are clamped to zero so
the similarity matrix can feed a convex weight combination downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .matrixio import (
    FormatError,
    HeaderError,
    LabelSet,
    NonFiniteError,
    ShapeError,
    format_float,
)

__all__ = [
    "EmbeddingTable",
    "LabelEmbedding",
    "tokenize_label",
    "embed_label",
    "cosine",
    "word2vec_similarity_matrix",
    "read_embeddings",
    "write_embeddings",
]

_TOKEN_SPLIT = re.compile(r"[,\s\-_]+")


@dataclass
class EmbeddingTable:
    """Word -> fixed-dimension vector map; words are lowercase and unique."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ShapeError(f"embedding dim must be >= 1, got {self.dim}")
        for word, vec in self.vectors.items():
            v = np.asarray(vec, dtype=np.float64)
            if v.shape != (self.dim,):
                raise ShapeError(
                    f"vector for {word!r} has shape {v.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(v)):
                raise NonFiniteError(f"vector for {word!r} has non-finite entries")
            self.vectors[word] = v

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class LabelEmbedding:
    vector: np.ndarray
    covered_words: int
    total_words: int


def tokenize_label(label: str) -> list[str]:
    """Lowercase tokens split on commas, whitespace, hyphens, underscores."""
    return [tok for tok in _TOKEN_SPLIT.split(label.lower()) if tok]


def embed_label(table: EmbeddingTable, label: str) -> LabelEmbedding:
    """Mean embedding over in-vocabulary token occurrences.

    Tokens are accumulated in sorted order so the result does not depend on
    word order within the label.  All-unknown labels embed to the zero
    vector.
    """
    tokens = tokenize_label(label)
    known = sorted(tok for tok in tokens if tok in table.vectors)
    if not known:
        return LabelEmbedding(np.zeros(table.dim), 0, len(tokens))
    acc = np.zeros(table.dim)
    for tok in known:
        acc += table.vectors[tok]
    return LabelEmbedding(acc / len(known), len(known), len(tokens))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|); 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ShapeError(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def word2vec_similarity_matrix(
    table: EmbeddingTable, source_labels: LabelSet, target_labels: LabelSet
) -> np.ndarray:
    """max(0, cosine) between averaged label embeddings, (n_targets, n_sources)."""
    src = [embed_label(table, lbl).vector for lbl in source_labels.labels]
    tgt = [embed_label(table, lbl).vector for lbl in target_labels.labels]
    sim = np.empty((len(tgt), len(src)), dtype=np.float64)
    for i, t in enumerate(tgt):
        for j, s in enumerate(src):
            sim[i, j] = max(0.0, cosine(t, s))
    return sim


# ---------------------------------------------------------------------------
# classic text embedding format


def read_embeddings(path: str) -> EmbeddingTable:
    """Load ``<word> <v1> ... <v_dim>`` lines.

    An optional ``<count> <dim>`` first line is detected by its token count;
    a two-token first line whose both tokens parse as integers is treated as
    the header.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise HeaderError(f"{path}: empty embedding file")

    start = 0
    declared = None
    first = lines[0].split()
    if len(first) == 2:
        try:
            declared = (int(first[0]), int(first[1]))
            start = 1
        except ValueError:
            declared = None

    vectors: dict[str, np.ndarray] = {}
    dim = declared[1] if declared else None
    for ln in lines[start:]:
        parts = ln.split()
        if len(parts) < 2:
            raise FormatError(f"{path}: expected '<word> <values...>', got {ln!r}")
        word = parts[0].lower()
        values = parts[1:]
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ShapeError(
                f"{path}: vector for {word!r} has {len(values)} values, expected {dim}"
            )
        if word in vectors:
            raise FormatError(f"{path}: duplicate word {word!r}")
        vec = np.empty(dim, dtype=np.float64)
        for k, tok in enumerate(values):
            try:
                vec[k] = float(tok)
            except ValueError:
                raise FormatError(f"{path}: bad value {tok!r} for word {word!r}") from None
        if not np.all(np.isfinite(vec)):
            raise NonFiniteError(f"{path}: non-finite value for word {word!r}")
        vectors[word] = vec
    if dim is None:
        raise HeaderError(f"{path}: no embedding rows found")
    if declared and declared[0] != len(vectors):
        raise ShapeError(
            f"{path}: header declares {declared[0]} words, found {len(vectors)}"
        )
    return EmbeddingTable(dim=dim, vectors=vectors)


def write_embeddings(table: EmbeddingTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word in sorted(table.vectors):
            if re.search(r"\s", word):
                raise FormatError(f"word may not contain whitespace: {word!r}")
            vec = table.vectors[word]
            fh.write(word + " " + " ".join(format_float(v) for v in vec) + "\n")
