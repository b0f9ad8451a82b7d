"""Time the numba kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_backends.py [--repeats N] [--batch B] [--dim D]

The numba path is warmed up before timing so JIT compilation is not
measured.  Timings are the best of `--repeats` wall-clock runs; the full
training row uses fewer repeats because it covers many optimizer steps.
"""

import argparse
import time

import numpy as np

from headstart import backend
from headstart.infersim import ClassifierHead
from headstart.matrixio import FeatureDataset
from headstart.trainer import TrainConfig, train


def best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_benchmarks(kernels, rng, n_classes, dim, batch, steps):
    w = rng.normal(size=(n_classes, dim))
    b = rng.normal(size=n_classes)
    x = rng.normal(size=(batch, dim))
    y = rng.integers(0, n_classes, size=batch).astype(np.int64)
    m_w, v_w = np.zeros_like(w), np.zeros_like(w)
    m_b, v_b = np.zeros_like(b), np.zeros_like(b)
    gw, gb, _ = kernels.ce_grad_batch(w, b, x, y)

    def run_logits():
        for _ in range(steps):
            kernels.logits_batch(w, b, x)

    def run_grad():
        for _ in range(steps):
            kernels.ce_grad_batch(w, b, x, y)

    def run_adam():
        for step in range(1, steps + 1):
            kernels.adam_update(
                w, b, m_w, v_w, m_b, v_b, gw, gb, 1e-3, 0.9, 0.999, 1e-8, step
            )

    return {"logits": run_logits, "ce_grad": run_grad, "adam": run_adam}


def training_benchmark(rng, n_classes, dim, per_class, epochs):
    centers = rng.normal(size=(n_classes, dim)) * 2.0
    feats = np.vstack(
        [centers[c] + rng.normal(size=(per_class, dim)) * 0.4 for c in range(n_classes)]
    )
    targets = np.repeat(np.arange(n_classes), per_class)
    data = FeatureDataset(features=feats, targets=targets)
    init = ClassifierHead(
        weights=rng.normal(size=(n_classes, dim)), bias=rng.normal(size=n_classes)
    )
    config = TrainConfig(epochs=epochs, batch_size=64, seed=0)

    def run():
        train(init, data, data, config)

    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--classes", type=int, default=9)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--steps", type=int, default=500, help="kernel calls per run")
    parser.add_argument("--per-class", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=20)
    args = parser.parse_args()

    rows = []
    for name in ("numpy", "numba"):
        kernels = backend.load_kernels(name)
        rng = np.random.default_rng(0)
        benches = kernel_benchmarks(
            kernels, rng, args.classes, args.dim, args.batch, args.steps
        )
        for label, fn in benches.items():
            fn()  # warm-up (JIT compile on the numba path)
            rows.append((name, label, best_of(args.repeats, fn) / args.steps))

        backend.use(name)
        try:
            run = training_benchmark(
                np.random.default_rng(1), args.classes, args.dim,
                args.per_class, args.epochs,
            )
            run()  # warm-up
            rows.append((name, "train-loop", best_of(max(2, args.repeats // 2), run)))
        finally:
            backend.use("auto")

    width = max(len(r[1]) for r in rows)
    print(f"{'backend':8s}  {'kernel':{width}s}  {'seconds/call':>14s}")
    for name, label, seconds in rows:
        print(f"{name:8s}  {label:{width}s}  {seconds:14.3e}")

    print()
    for label in sorted({r[1] for r in rows}):
        numpy_t = next(r[2] for r in rows if r[0] == "numpy" and r[1] == label)
        numba_t = next(r[2] for r in rows if r[0] == "numba" and r[1] == label)
        print(f"{label}: numba is {numpy_t / numba_t:.2f}x the numpy backend")


if __name__ == "__main__":
    main()
