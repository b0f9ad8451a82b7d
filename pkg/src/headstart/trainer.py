"""Softmax head training with Adam, input dropout, and periodic evaluation.

The inner loops (logits, loss gradient, Adam update) run on the backend
selected in ``backend``; everything stochastic (epoch shuffling, dropout
masks) is generated here with numpy Generators so the choice of backend
never changes the data a run consumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .infersim import ClassifierHead, fscore
from .matrixio import FeatureDataset, ShapeError, ensure_parent_dir

__all__ = [
    "TrainConfig",
    "EvalResult",
    "MetricRecord",
    "MetricHistory",
    "forward",
    "evaluate",
    "train",
    "write_history",
]

# distinct stream keys so shuffle and dropout draws never alias
_SHUFFLE_STREAM = 101
_DROPOUT_STREAM = 202


@dataclass
class TrainConfig:
    """Optimizer and schedule settings for ``train``."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    dropout_rate: float = 0.75
    epochs: int = 50
    eval_every: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")


@dataclass(frozen=True)
class EvalResult:
    """Metrics of one evaluation pass over a fixed dataset."""

    loss: float
    macro_f1: float
    per_class_f1: np.ndarray


@dataclass(frozen=True)
class MetricRecord:
    step: int
    loss: float
    macro_f1: float
    per_class_f1: np.ndarray


@dataclass
class MetricHistory:
    """Evaluation records in step order, including step 0."""

    records: list[MetricRecord] = field(default_factory=list)

    def append(self, record: MetricRecord) -> None:
        self.records.append(record)

    @property
    def first(self) -> MetricRecord:
        return self.records[0]

    @property
    def best(self) -> MetricRecord:
        return max(self.records, key=lambda r: (r.macro_f1, -r.step))

    def __len__(self) -> int:
        return len(self.records)


def forward(head: ClassifierHead, x: np.ndarray) -> np.ndarray:
    """Softmax probabilities of one feature vector, shape (n_classes,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (head.dim,):
        raise ShapeError(f"expected feature shape ({head.dim},), got {x.shape}")
    z = head.weights @ x + head.bias
    z = z - z.max()
    ez = np.exp(z)
    return ez / ez.sum()


def evaluate(head: ClassifierHead, data: FeatureDataset) -> EvalResult:
    """Mean cross-entropy and macro F1 (one-vs-rest per class) on ``data``."""
    if data.dim != head.dim:
        raise ShapeError(f"feature dim {data.dim} does not match head dim {head.dim}")
    n_classes = head.n_classes
    if int(data.targets.max()) >= n_classes:
        raise ValueError(
            f"target class {int(data.targets.max())} out of range for {n_classes} classes"
        )
    z = backend.kernels.logits_batch(head.weights, head.bias, data.features)
    zmax = z.max(axis=1)
    log_denom = np.log(np.exp(z - zmax[:, None]).sum(axis=1))
    rows = np.arange(data.n_samples)
    loss = float(-(z[rows, data.targets] - zmax - log_denom).mean())

    predicted = np.argmax(z, axis=1)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (data.targets, predicted), 1)
    per_class = np.empty(n_classes, dtype=np.float64)
    for i in range(n_classes):
        tp = int(confusion[i, i])
        fp = int(confusion[:, i].sum()) - tp
        fn = int(confusion[i, :].sum()) - tp
        per_class[i] = fscore(tp, fp, fn)
    return EvalResult(loss, float(per_class.mean()), per_class)


def _dropout_batch(x: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    # inverted dropout: keep with probability 1 - rate, rescale kept features
    keep = rng.random(x.shape) >= rate
    return x * (keep / (1.0 - rate))


def train(
    init: ClassifierHead,
    train_data: FeatureDataset,
    eval_data: FeatureDataset,
    config: TrainConfig | None = None,
) -> tuple[ClassifierHead, MetricHistory]:
    """Train a copy of ``init`` on ``train_data``, tracking metrics on ``eval_data``.

    Mini-batches are drawn from a fresh seeded shuffle every epoch; the last
    short batch of an epoch is used as-is.  Evaluation runs before the first
    update (step 0), after every ``config.eval_every`` updates, and after the
    final update.  Requires every class 0..n_classes-1 to appear at least
    once in the training targets.
    """
    if config is None:
        config = TrainConfig()
    if train_data.dim != init.dim:
        raise ShapeError(
            f"training dim {train_data.dim} does not match head dim {init.dim}"
        )
    present = np.unique(train_data.targets)
    expected = np.arange(init.n_classes)
    if present.shape != expected.shape or not np.array_equal(present, expected):
        missing = sorted(set(expected.tolist()) - set(present.tolist()))
        raise ValueError(f"training data is missing classes {missing}")

    head = init.copy()
    m_w = np.zeros_like(head.weights)
    v_w = np.zeros_like(head.weights)
    m_b = np.zeros_like(head.bias)
    v_b = np.zeros_like(head.bias)
    shuffle_rng = np.random.default_rng([config.seed, _SHUFFLE_STREAM])
    dropout_rng = np.random.default_rng([config.seed, _DROPOUT_STREAM])

    history = MetricHistory()

    def record(step: int) -> None:
        result = evaluate(head, eval_data)
        history.append(MetricRecord(step, result.loss, result.macro_f1, result.per_class_f1))

    record(0)
    step = 0
    n = train_data.n_samples
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            x = train_data.features[batch]
            y = train_data.targets[batch]
            if config.dropout_rate > 0.0:
                x = _dropout_batch(x, config.dropout_rate, dropout_rng)
            grad_w, grad_b, _ = backend.kernels.ce_grad_batch(head.weights, head.bias, x, y)
            step += 1
            backend.kernels.adam_update(
                head.weights,
                head.bias,
                m_w,
                v_w,
                m_b,
                v_b,
                grad_w,
                grad_b,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.epsilon,
                step,
            )
            if step % config.eval_every == 0:
                record(step)
    if history.records[-1].step != step:
        record(step)
    return head, history


def write_history(history: MetricHistory, path: str) -> None:
    """CSV with columns step, loss, macro_f1, then one f1_class_<i> per class."""
    if not history.records:
        raise ValueError("cannot write an empty history")
    n_classes = history.records[0].per_class_f1.shape[0]
    ensure_parent_dir(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step", "loss", "macro_f1"] + [f"f1_class_{i}" for i in range(n_classes)]
        )
        for r in history.records:
            writer.writerow(
                [r.step, repr(r.loss), repr(r.macro_f1)]
                + [repr(float(v)) for v in r.per_class_f1]
            )
