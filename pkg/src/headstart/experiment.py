"""Desk-scale experiment protocols on synthetic tasks.

A synthetic task bundles everything the toolkit needs end to end: a latent
class hierarchy drives Gaussian feature clusters (visual structure), a
taxonomy file view of that hierarchy (corrupted by ``semantic_noise``), and
a word-embedding table anchored to the same hierarchy (independently
corrupted).  A source head is trained on the source clusters until it is
cleanly separable, then the protocols compare warm-started target heads
against a random baseline:

* ``run_comparison``: step-0 and best macro F1 per similarity method
* ``run_k_sweep``: step-0 quality as the neighbor count K varies, per type
* ``run_data_reduction``: the same comparison under shrinking training sets
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedsim import EmbeddingTable, word2vec_similarity_matrix
from .infersim import (
    ClassifierHead,
    inference_similarity_matrix,
    predict_source,
)
from .matrixio import FeatureDataset, LabelEntry, LabelSet, ensure_parent_dir, format_float
from .taxonomy import TargetType, Taxonomy, wordnet_similarity_matrix
from .trainer import TrainConfig, evaluate, train
from .warmstart import InitSpec, build_target_head, xavier_init

__all__ = [
    "TaskGenerationError",
    "SyntheticTask",
    "MethodResult",
    "ComparisonReport",
    "KSweepRow",
    "ReductionCell",
    "generate_task",
    "similarity_suite",
    "run_comparison",
    "run_k_sweep",
    "run_data_reduction",
    "subsample_per_class",
    "chance_macro_f1",
    "per_type_means",
    "summarize_comparisons",
    "summarize_reduction",
    "format_table",
    "write_comparison_csv",
    "write_ksweep_csv",
    "write_reduction_csv",
    "format_comparison_table",
    "format_ksweep_table",
    "format_reduction_table",
    "METHOD_ORDER",
    "SIMILARITY_METHODS",
]

SIMILARITY_METHODS = ("wordnet", "word2vec", "inference")
METHOD_ORDER = ("random",) + SIMILARITY_METHODS


class TaskGenerationError(RuntimeError):
    """Raised when a generated task misses its separability target."""


@dataclass
class SyntheticTask:
    """One generated transfer problem (see module docstring)."""

    source_head: ClassifierHead
    source_labels: LabelSet
    target_labels: LabelSet
    taxonomy: Taxonomy
    embeddings: EmbeddingTable
    target_types: list[TargetType]
    train_data: FeatureDataset
    test_data: FeatureDataset
    source_data: FeatureDataset
    source_macro_f1: float
    seed: int
    semantic_noise: float


@dataclass(frozen=True)
class MethodResult:
    """First (step-0) and best evaluation of one initialization method."""

    method: str
    first_macro_f1: float
    best_macro_f1: float
    best_step: int
    first_per_class: np.ndarray
    best_per_class: np.ndarray


@dataclass
class ComparisonReport:
    methods: dict[str, MethodResult]
    target_types: list[TargetType]
    chance_f1: float


@dataclass(frozen=True)
class KSweepRow:
    method: str
    k: int
    overall: float
    per_type: dict[TargetType, float]


@dataclass(frozen=True)
class ReductionCell:
    samples_per_class: int
    method: str
    first_macro_f1: float
    best_macro_f1: float


def chance_macro_f1(n_classes: int) -> float:
    """Macro F1 of label-independent uniform guessing on balanced classes.

    Each class then has precision and recall 1/n, so every per-class F1,
    and hence the macro average, equals 1/n.
    """
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    return 1.0 / n_classes


# ---------------------------------------------------------------------------
# synthetic task generation

_SOURCE_TRIES = (40, 80, 160)  # epoch budgets tried before giving up


def _source_group(j: int, group_size: int) -> int:
    return j // group_size


def generate_task(
    m_sources: int,
    n_targets: int,
    dim: int,
    samples_per_class: int,
    seed: int,
    *,
    semantic_noise: float = 0.1,
    test_samples_per_class: int = 100,
    source_samples_per_class: int = 50,
    group_size: int = 5,
    cluster_std: float = 0.35,
    embed_dim: int = 16,
    min_source_f1: float = 0.95,
) -> SyntheticTask:
    """Generate one deterministic synthetic transfer task.

    Targets split into three equal blocks: included (a tight sub-region of
    one source cluster), inclusive (a mixture over 2-3 source clusters), and
    disjoint (a fresh cluster).  ``semantic_noise`` is the probability that
    a target's taxonomy attachment, or a target label word's embedding, is
    re-drawn at random; the two corruptions are independent.  Raises
    ``TaskGenerationError`` when the source head cannot reach
    ``min_source_f1`` macro F1 on its own training data.
    """
    if n_targets < 3 or n_targets % 3 != 0:
        raise ValueError(f"n_targets must be a positive multiple of 3, got {n_targets}")
    if m_sources < n_targets:
        raise ValueError(
            f"m_sources ({m_sources}) must be >= n_targets ({n_targets})"
        )
    if dim < 2 or embed_dim < 2:
        raise ValueError("dim and embed_dim must be >= 2")
    if min(samples_per_class, test_samples_per_class, source_samples_per_class) < 1:
        raise ValueError("sample counts must be >= 1")
    if not 0.0 <= semantic_noise <= 1.0:
        raise ValueError(f"semantic_noise must lie in [0, 1], got {semantic_noise}")
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    if not cluster_std > 0:
        raise ValueError("cluster_std must be > 0")

    rng = np.random.default_rng(seed)
    n_groups = -(-m_sources // group_size)
    n_each = n_targets // 3

    # latent visual geometry
    group_centers = rng.normal(0.0, 1.0, size=(n_groups, dim))
    source_centers = np.empty((m_sources, dim))
    for j in range(m_sources):
        source_centers[j] = group_centers[_source_group(j, group_size)] + rng.normal(
            0.0, 0.5, size=dim
        )

    # visual ground truth for the three target blocks
    perm = rng.permutation(m_sources)
    included_parents = [int(perm[i]) for i in range(n_each)]
    pool = [int(j) for j in perm[n_each:]]
    inclusive_children: list[list[int]] = []
    idx = 0
    for t in range(n_each):
        must_reserve = 2 * (n_each - t - 1)
        can_take_three = len(pool) - idx - 3 >= must_reserve
        take = 3 if (can_take_three and rng.random() < 0.5) else 2
        inclusive_children.append(pool[idx : idx + take])
        idx += take

    target_types = (
        [TargetType.INCLUDED] * n_each
        + [TargetType.INCLUSIVE] * n_each
        + [TargetType.DISJOINT] * n_each
    )

    target_centers = np.empty((n_targets, dim))
    for i in range(n_each):  # included: tight sub-region of the parent cluster
        offset = rng.normal(0.0, 0.7 * cluster_std, size=dim)
        target_centers[i] = source_centers[included_parents[i]] + offset
    for t in range(n_each):  # inclusive: centroid only used for bookkeeping
        target_centers[n_each + t] = source_centers[inclusive_children[t]].mean(axis=0)
    for t in range(n_each):  # disjoint: fresh location, same radial scale as sources
        target_centers[2 * n_each + t] = rng.normal(0.0, np.sqrt(1.25), size=dim)

    def draw_target_samples(i: int, count: int) -> np.ndarray:
        kind = target_types[i]
        if kind is TargetType.INCLUDED:
            return target_centers[i] + rng.normal(0.0, 0.5 * cluster_std, size=(count, dim))
        if kind is TargetType.INCLUSIVE:
            children = inclusive_children[i - n_each]
            picks = rng.integers(0, len(children), size=count)
            base = source_centers[[children[p] for p in picks]]
            return base + rng.normal(0.0, cluster_std, size=(count, dim))
        return target_centers[i] + rng.normal(0.0, cluster_std, size=(count, dim))

    def stack_dataset(counts: int, n_classes: int, sampler) -> FeatureDataset:
        blocks = [sampler(i, counts) for i in range(n_classes)]
        features = np.vstack(blocks)
        targets = np.repeat(np.arange(n_classes, dtype=np.int64), counts)
        return FeatureDataset(features, targets)

    source_data = stack_dataset(
        source_samples_per_class,
        m_sources,
        lambda j, c: source_centers[j] + rng.normal(0.0, cluster_std, size=(c, dim)),
    )
    train_data = stack_dataset(samples_per_class, n_targets, draw_target_samples)
    test_data = stack_dataset(test_samples_per_class, n_targets, draw_target_samples)

    # taxonomy view of the hierarchy, with noisy attachments
    group_node = [f"n001{k:05d}" for k in range(n_groups)]
    source_node = [f"n002{j:05d}" for j in range(m_sources)]
    target_node = [f"n003{i:05d}" for i in range(n_targets)]
    root = "n00000001"

    taxonomy_parent_of_included = list(included_parents)
    for t in range(n_each):
        if rng.random() < semantic_noise:
            others = [j for j in range(m_sources) if j != included_parents[t]]
            taxonomy_parent_of_included[t] = int(rng.choice(others))

    taxonomy_children_of_inclusive = [list(c) for c in inclusive_children]
    for t in range(n_each):
        if rng.random() < semantic_noise:
            others = [j for j in range(m_sources) if j not in inclusive_children[t]]
            picks = rng.choice(len(others), size=len(inclusive_children[t]), replace=False)
            taxonomy_children_of_inclusive[t] = [others[int(p)] for p in picks]

    disjoint_group = [int(rng.integers(0, n_groups)) for _ in range(n_each)]

    claimed_by: dict[int, set[str]] = {}
    for t in range(n_each):
        for j in taxonomy_children_of_inclusive[t]:
            claimed_by.setdefault(j, set()).add(target_node[n_each + t])

    parent_edges: dict[str, set[str]] = {}
    for k in range(n_groups):
        parent_edges[group_node[k]] = {root}
    for j in range(m_sources):
        if j in claimed_by:
            parent_edges[source_node[j]] = set(claimed_by[j])
        else:
            parent_edges[source_node[j]] = {group_node[_source_group(j, group_size)]}
    for t in range(n_each):
        parent_edges[target_node[t]] = {source_node[taxonomy_parent_of_included[t]]}
        first_child = taxonomy_children_of_inclusive[t][0]
        parent_edges[target_node[n_each + t]] = {
            group_node[_source_group(first_child, group_size)]
        }
        parent_edges[target_node[2 * n_each + t]] = {group_node[disjoint_group[t]]}
    taxonomy = Taxonomy(parent_edges)

    # labels: two words per class, both anchored at the class in embedding space
    source_labels = LabelSet(
        [
            LabelEntry(j, f"obj{j:03d}, kin{j:03d}", source_node[j])
            for j in range(m_sources)
        ]
    )
    target_labels = LabelSet(
        [
            LabelEntry(i, f"cls{i:02d} var{i:02d} kind{i:02d}", target_node[i])
            for i in range(n_targets)
        ]
    )

    # embedding table anchored to the latent hierarchy (independent noise)
    sem_group = rng.normal(0.0, 1.0, size=(n_groups, embed_dim))
    sem_source = np.empty((m_sources, embed_dim))
    for j in range(m_sources):
        sem_source[j] = sem_group[_source_group(j, group_size)] + rng.normal(
            0.0, 1.2, size=embed_dim
        )

    vectors: dict[str, np.ndarray] = {}
    for j in range(m_sources):
        for word in (f"obj{j:03d}", f"kin{j:03d}"):
            vectors[word] = sem_source[j] + rng.normal(0.0, 0.3, size=embed_dim)

    sem_anchor = np.empty((n_targets, embed_dim))
    for t in range(n_each):
        sem_anchor[t] = sem_source[included_parents[t]]
        sem_anchor[n_each + t] = sem_source[inclusive_children[t]].mean(axis=0)
        sem_anchor[2 * n_each + t] = sem_group[int(rng.integers(0, n_groups))]
    for i in range(n_targets):
        for word in (f"cls{i:02d}", f"var{i:02d}", f"kind{i:02d}"):
            anchor = sem_anchor[i]
            if rng.random() < semantic_noise:
                anchor = sem_source[int(rng.integers(0, m_sources))]
            vectors[word] = anchor + rng.normal(0.0, 0.3, size=embed_dim)
    embeddings = EmbeddingTable(embed_dim, vectors)

    # train the source head until it cleanly separates its own clusters
    source_macro = 0.0
    source_head: ClassifierHead | None = None
    for epochs in _SOURCE_TRIES:
        config = TrainConfig(
            learning_rate=5e-3,
            dropout_rate=0.0,
            epochs=epochs,
            eval_every=10_000_000,
            seed=seed,
        )
        init = xavier_init(m_sources, dim, seed)
        head, _ = train(init, source_data, source_data, config)
        result = evaluate(head, source_data)
        source_head = head
        source_macro = result.macro_f1
        if source_macro >= min_source_f1:
            break
    if source_head is None or source_macro < min_source_f1:
        raise TaskGenerationError(
            f"source head reached macro F1 {source_macro:.4f} < {min_source_f1} "
            f"(seed {seed})"
        )

    return SyntheticTask(
        source_head=source_head,
        source_labels=source_labels,
        target_labels=target_labels,
        taxonomy=taxonomy,
        embeddings=embeddings,
        target_types=target_types,
        train_data=train_data,
        test_data=test_data,
        source_data=source_data,
        source_macro_f1=source_macro,
        seed=seed,
        semantic_noise=semantic_noise,
    )


# ---------------------------------------------------------------------------
# protocols


def similarity_suite(task: SyntheticTask, data: FeatureDataset) -> dict[str, np.ndarray]:
    """All three similarity matrices for a task; inference uses ``data``."""
    predictions = predict_source(task.source_head, data)
    return {
        "wordnet": wordnet_similarity_matrix(
            task.taxonomy, task.source_labels, task.target_labels
        ),
        "word2vec": word2vec_similarity_matrix(
            task.embeddings, task.source_labels, task.target_labels
        ),
        "inference": inference_similarity_matrix(
            predictions, len(task.target_labels), len(task.source_labels)
        ),
    }


def _build_heads(
    task: SyntheticTask, sims: dict[str, np.ndarray], spec: InitSpec
) -> dict[str, ClassifierHead]:
    n_targets = len(task.target_labels)
    heads = {"random": xavier_init(n_targets, task.source_head.dim, spec.fallback_seed)}
    for name in SIMILARITY_METHODS:
        head, _ = build_target_head(task.source_head, sims[name], task.target_types, spec)
        heads[name] = head
    return heads


def _result_from_history(method: str, history) -> MethodResult:
    first = history.first
    best = history.best
    return MethodResult(
        method,
        first.macro_f1,
        best.macro_f1,
        best.step,
        first.per_class_f1,
        best.per_class_f1,
    )


def run_comparison(
    task: SyntheticTask, spec: InitSpec, config: TrainConfig
) -> ComparisonReport:
    """Train all four initializations on the full training set."""
    sims = similarity_suite(task, task.train_data)
    heads = _build_heads(task, sims, spec)
    methods: dict[str, MethodResult] = {}
    for name in METHOD_ORDER:
        _, history = train(heads[name], task.train_data, task.test_data, config)
        methods[name] = _result_from_history(name, history)
    return ComparisonReport(
        methods, list(task.target_types), chance_macro_f1(len(task.target_labels))
    )


def per_type_means(
    per_class: np.ndarray, target_types: list[TargetType]
) -> dict[TargetType, float]:
    """Mean per-class score within each target type."""
    out: dict[TargetType, float] = {}
    for kind in TargetType:
        values = [float(per_class[i]) for i, t in enumerate(target_types) if t is kind]
        if values:
            out[kind] = float(np.mean(values))
    return out


def run_k_sweep(
    task: SyntheticTask, k_values: list[int], fallback_seed: int = 0
) -> list[KSweepRow]:
    """Step-0 test quality as the neighbor count varies (no training).

    Each K is applied uniformly to every target type so the per-type curves
    are directly comparable.
    """
    m_sources = len(task.source_labels)
    for k in k_values:
        if not 1 <= k <= m_sources:
            raise ValueError(f"k must lie in [1, {m_sources}], got {k}")
    sims = similarity_suite(task, task.train_data)
    rows: list[KSweepRow] = []
    for name in SIMILARITY_METHODS:
        for k in k_values:
            spec = InitSpec(
                k_disjoint=k, k_included=k, k_inclusive=k, fallback_seed=fallback_seed
            )
            head, _ = build_target_head(
                task.source_head, sims[name], task.target_types, spec
            )
            result = evaluate(head, task.test_data)
            rows.append(
                KSweepRow(
                    name,
                    k,
                    result.macro_f1,
                    per_type_means(result.per_class_f1, task.target_types),
                )
            )
    return rows


def subsample_per_class(
    data: FeatureDataset, per_class: int, rng: np.random.Generator
) -> FeatureDataset:
    """Keep ``per_class`` randomly chosen samples of every class."""
    classes = np.unique(data.targets)
    keep: list[np.ndarray] = []
    for c in classes:
        idx = np.flatnonzero(data.targets == c)
        if idx.size < per_class:
            raise ValueError(
                f"class {int(c)} has {idx.size} samples, cannot keep {per_class}"
            )
        chosen = rng.permutation(idx.size)[:per_class]
        keep.append(np.sort(idx[chosen]))
    order = np.concatenate(keep)
    return FeatureDataset(data.features[order].copy(), data.targets[order].copy())


def run_data_reduction(
    task: SyntheticTask,
    counts: list[int],
    spec: InitSpec,
    config: TrainConfig,
) -> list[ReductionCell]:
    """Comparison under shrinking training sets.

    Semantic similarity matrices do not depend on the training data, so they
    are computed once; the inference matrix is recomputed from each reduced
    set.  Subsampling is seeded per count, so a rerun reproduces the cells.
    """
    counts = list(counts)
    if not counts:
        raise ValueError("counts must be non-empty")
    semantic = {
        name: sim
        for name, sim in similarity_suite(task, task.train_data).items()
        if name != "inference"
    }
    cells: list[ReductionCell] = []
    for count in counts:
        rng = np.random.default_rng([task.seed, config.seed, count])
        reduced = subsample_per_class(task.train_data, count, rng)
        predictions = predict_source(task.source_head, reduced)
        sims = dict(semantic)
        sims["inference"] = inference_similarity_matrix(
            predictions, len(task.target_labels), len(task.source_labels)
        )
        heads = _build_heads(task, sims, spec)
        for name in METHOD_ORDER:
            _, history = train(heads[name], reduced, task.test_data, config)
            result = _result_from_history(name, history)
            cells.append(
                ReductionCell(count, name, result.first_macro_f1, result.best_macro_f1)
            )
    return cells


# ---------------------------------------------------------------------------
# aggregation and report emission


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def summarize_comparisons(reports: list[ComparisonReport]) -> list[dict]:
    """Per-method mean and sample std of first/best macro F1 over reports."""
    if not reports:
        raise ValueError("no reports to summarize")
    rows = []
    for name in METHOD_ORDER:
        firsts = [r.methods[name].first_macro_f1 for r in reports]
        bests = [r.methods[name].best_macro_f1 for r in reports]
        first_mean, first_std = _mean_std(firsts)
        best_mean, best_std = _mean_std(bests)
        rows.append(
            {
                "method": name,
                "first": first_mean,
                "first_std": first_std,
                "best": best_mean,
                "best_std": best_std,
            }
        )
    return rows


def summarize_reduction(
    cell_lists: list[list[ReductionCell]], counts: list[int]
) -> list[dict]:
    """Mean first/best per (count, method) across repeated reduction runs."""
    if not cell_lists:
        raise ValueError("no reduction runs to summarize")
    rows = []
    for count in counts:
        for name in METHOD_ORDER:
            firsts: list[float] = []
            bests: list[float] = []
            for cells in cell_lists:
                for cell in cells:
                    if cell.samples_per_class == count and cell.method == name:
                        firsts.append(cell.first_macro_f1)
                        bests.append(cell.best_macro_f1)
            first_mean, _ = _mean_std(firsts)
            best_mean, _ = _mean_std(bests)
            rows.append(
                {
                    "images_per_class": count,
                    "method": name,
                    "first": first_mean,
                    "best": best_mean,
                }
            )
    return rows


def format_table(headers: list[str], rows: list[list[str]]) -> str:
    """Plain-text table with space-padded, left-aligned columns."""
    widths = [len(h) for h in headers]
    for row in rows:
        for c, cell in enumerate(row):
            widths[c] = max(widths[c], len(cell))
    lines = [
        "  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[c] for c in range(len(headers))).rstrip(),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def write_comparison_csv(summary: list[dict], path: str) -> None:
    ensure_parent_dir(path)
    with open(path, "w", newline="") as fh:
        fh.write("method,first,first_std,best,best_std\n")
        for row in summary:
            fh.write(
                f"{row['method']},{format_float(row['first'])},"
                f"{format_float(row['first_std'])},{format_float(row['best'])},"
                f"{format_float(row['best_std'])}\n"
            )


def format_comparison_table(summary: list[dict], chance: float) -> str:
    rows = [
        [
            row["method"],
            f"{row['first']:.4f} ± {row['first_std']:.4f}",
            f"{row['best']:.4f} ± {row['best_std']:.4f}",
        ]
        for row in summary
    ]
    rows.append(["chance", f"{chance:.4f}", ""])
    return format_table(["method", "first", "best"], rows)


def write_ksweep_csv(rows: list[KSweepRow], path: str) -> None:
    ensure_parent_dir(path)
    with open(path, "w", newline="") as fh:
        fh.write("method,k,all,included,inclusive,disjoint\n")
        for row in rows:
            fh.write(
                f"{row.method},{row.k},{format_float(row.overall)},"
                f"{format_float(row.per_type[TargetType.INCLUDED])},"
                f"{format_float(row.per_type[TargetType.INCLUSIVE])},"
                f"{format_float(row.per_type[TargetType.DISJOINT])}\n"
            )


def format_ksweep_table(rows: list[KSweepRow]) -> str:
    body = [
        [
            row.method,
            str(row.k),
            f"{row.overall:.4f}",
            f"{row.per_type[TargetType.INCLUDED]:.4f}",
            f"{row.per_type[TargetType.INCLUSIVE]:.4f}",
            f"{row.per_type[TargetType.DISJOINT]:.4f}",
        ]
        for row in rows
    ]
    return format_table(["method", "k", "all", "included", "inclusive", "disjoint"], body)


def write_reduction_csv(rows: list[dict], path: str) -> None:
    ensure_parent_dir(path)
    with open(path, "w", newline="") as fh:
        fh.write("images_per_class,method,first,best\n")
        for row in rows:
            fh.write(
                f"{row['images_per_class']},{row['method']},"
                f"{format_float(row['first'])},{format_float(row['best'])}\n"
            )


def format_reduction_table(rows: list[dict]) -> str:
    body = [
        [
            str(row["images_per_class"]),
            row["method"],
            f"{row['first']:.4f}",
            f"{row['best']:.4f}",
        ]
        for row in rows
    ]
    return format_table(["images_per_class", "method", "first", "best"], body)
