"""End-to-end acceptance suite.

Each test is one acceptance gate; the conftest prints a PASS/FAIL line per
gate after the run.  Oracles here are written from scratch so the library is
checked against independent derivations.
"""

import time

import numpy as np
import pytest

from headstart import backend
from headstart.cli import main as cli_main
from headstart.embedsim import write_embeddings
from headstart.experiment import (
    SIMILARITY_METHODS,
    generate_task,
    run_comparison,
    run_data_reduction,
    summarize_comparisons,
    summarize_reduction,
    format_comparison_table,
    write_comparison_csv,
)
from headstart.infersim import (
    ClassifierHead,
    inference_similarity_matrix,
    predict_source,
    write_head,
)
from headstart.matrixio import (
    FeatureDataset,
    PredictionRecord,
    write_features,
    write_labels,
)
from headstart.taxonomy import Taxonomy, write_taxonomy, write_types
from headstart.trainer import TrainConfig
from headstart.warmstart import InitSpec, build_target_head

# ---------------------------------------------------------------------------
# shared benchmark protocol: 10 synthetic tasks at the reference size

SEED_COUNT = 10
REDUCTION_COUNTS = [100, 50, 20, 10, 5, 2, 1]


@pytest.fixture(scope="module")
def bench_tasks():
    t0 = time.perf_counter()
    tasks = [
        generate_task(
            m_sources=30, n_targets=9, dim=32, samples_per_class=100, seed=s
        )
        for s in range(SEED_COUNT)
    ]
    return tasks, time.perf_counter() - t0


@pytest.fixture(scope="module")
def comparison(bench_tasks):
    tasks, gen_elapsed = bench_tasks
    t0 = time.perf_counter()
    reports = [
        run_comparison(task, InitSpec(), TrainConfig(seed=task.seed))
        for task in tasks
    ]
    return reports, gen_elapsed + (time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 1: taxonomy similarity vs an exhaustive common-ancestor oracle


def _oracle_ancestors(parents, node):
    seen = {node}
    stack = [node]
    while stack:
        for p in parents.get(stack.pop(), ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def _oracle_depth(parents, node):
    level = {node}
    seen = {node}
    depth = 1
    while True:
        if any(not parents.get(n) for n in level):
            return depth
        nxt = set()
        for n in level:
            for p in parents.get(n, ()):
                if p not in seen:
                    seen.add(p)
                    nxt.add(p)
        level = nxt
        depth += 1


def _oracle_similarity(parents, a, b):
    common = _oracle_ancestors(parents, a) & _oracle_ancestors(parents, b)
    if not common:
        return 0.0
    best = max(
        2.0 * _oracle_depth(parents, anc) for anc in common
    ) / (_oracle_depth(parents, a) + _oracle_depth(parents, b))
    return min(1.0, best)


def _random_dag(rng, max_nodes=30):
    n = int(rng.integers(2, max_nodes + 1))
    names = [f"n{i:02d}" for i in range(n)]
    parents = {names[0]: set()}
    for i in range(1, n):
        if rng.random() < 0.15:
            parents[names[i]] = set()
            continue
        count = int(rng.integers(1, min(i, 3) + 1))
        picks = rng.choice(i, size=count, replace=False)
        parents[names[i]] = {names[int(p)] for p in picks}
    return names, parents


def test_a1_taxonomy_similarity_matches_exhaustive_oracle():
    rng = np.random.default_rng(20240801)
    t0 = time.perf_counter()
    checked = 0
    for _ in range(200):
        names, parents = _random_dag(rng)
        taxonomy = Taxonomy(parents)
        pairs = [(names[0], names[0])]
        for _ in range(12):
            a, b = (names[int(i)] for i in rng.integers(0, len(names), size=2))
            pairs.append((a, b))
        for a, b in pairs:
            expected = _oracle_similarity(parents, a, b)
            got = taxonomy.wu_palmer(a, b)
            assert abs(got - expected) <= 1e-12, (a, b, got, expected, parents)
            checked += 1
    elapsed = time.perf_counter() - t0
    assert checked >= 200 * 13
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2: prediction-based similarity vs a brute-force confusion oracle


def _oracle_inference(records, n_targets, n_sources):
    counts = np.zeros((n_targets, n_sources), dtype=np.int64)
    for r in records:
        counts[r.target_class, r.predicted_source] += 1
    sim = np.zeros((n_targets, n_sources))
    for i in range(n_targets):
        for j in range(n_sources):
            tp = counts[i, j]
            if tp == 0:
                continue
            p = tp / counts[:, j].sum()
            r = tp / counts[i, :].sum()
            sim[i, j] = 2.0 * p * r / (p + r)
    return sim


def test_a2_inference_similarity_matches_confusion_oracle():
    rng = np.random.default_rng(20240802)
    t0 = time.perf_counter()
    for _ in range(200):
        nt = int(rng.integers(1, 11))
        ns = int(rng.integers(1, 11))
        count = int(rng.integers(1, 1001))
        records = [
            PredictionRecord(
                sample_id=str(k),
                target_class=int(rng.integers(0, nt)),
                predicted_source=int(rng.integers(0, ns)),
            )
            for k in range(count)
        ]
        got = inference_similarity_matrix(records, nt, ns)
        expected = _oracle_inference(records, nt, ns)
        assert np.array_equal(got, expected)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 3: algebra of the combined head


def test_a3_initialization_algebra_properties():
    from headstart.taxonomy import TargetType

    rng = np.random.default_rng(20240803)
    types_pool = list(TargetType)
    for _ in range(500):
        m = int(rng.integers(2, 13))
        d = int(rng.integers(1, 9))
        n = int(rng.integers(1, 5))
        head = ClassifierHead(
            weights=rng.normal(size=(m, d)), bias=rng.normal(size=m)
        )
        # small values leave room for upscaling inside the [0, 1] domain
        sim = rng.uniform(0.0, 0.1, size=(n, m))
        sim[rng.random(size=sim.shape) < 0.25] = 0.0
        types = [types_pool[int(t)] for t in rng.integers(0, 3, size=n)]
        spec = InitSpec(
            k_disjoint=int(rng.integers(1, m + 1)),
            k_included=int(rng.integers(1, m + 1)),
            k_inclusive=int(rng.integers(1, m + 1)),
            fallback_seed=int(rng.integers(0, 100)),
        )

        built, selections = build_target_head(head, sim, types, spec)

        for i, picked in enumerate(selections):
            if not picked:
                assert not np.any(sim[i] > 0.0)
                continue
            # convex coefficients
            assert abs(sum(nb.coefficient for nb in picked) - 1.0) <= 1e-12
            # componentwise min/max envelope of the selected source rows
            rows = head.weights[[nb.source for nb in picked]]
            assert np.all(built.weights[i] >= rows.min(axis=0) - 1e-12)
            assert np.all(built.weights[i] <= rows.max(axis=0) + 1e-12)
            biases = head.bias[[nb.source for nb in picked]]
            assert biases.min() - 1e-12 <= built.bias[i] <= biases.max() + 1e-12

        # K=1 rows are bitwise copies of the most similar source row
        one = InitSpec(
            k_disjoint=1, k_included=1, k_inclusive=1, fallback_seed=spec.fallback_seed
        )
        copied, picks1 = build_target_head(head, sim, types, one)
        for i, picked in enumerate(picks1):
            if not picked:
                continue
            j = int(np.argmax(sim[i]))
            assert picked[0].source == j
            assert copied.weights[i].tobytes() == head.weights[j].tobytes()
            assert copied.bias[i] == head.bias[j]

        # scaling one row by a power of two is bitwise invisible ...
        row = int(rng.integers(0, n))
        scaled = sim.copy()
        scaled[row] *= float(2.0 ** int(rng.integers(-4, 4)))
        rebuilt, _ = build_target_head(head, scaled, types, spec)
        assert rebuilt.weights.tobytes() == built.weights.tobytes()
        assert rebuilt.bias.tobytes() == built.bias.tobytes()

        # ... and any positive scale is invisible up to float rounding
        scaled = sim.copy()
        scaled[row] *= float(rng.uniform(0.11, 9.9))
        rebuilt, _ = build_target_head(head, scaled, types, spec)
        np.testing.assert_allclose(
            rebuilt.weights, built.weights, rtol=1e-12, atol=0
        )
        np.testing.assert_allclose(rebuilt.bias, built.bias, rtol=1e-12, atol=0)


# ---------------------------------------------------------------------------
# 4: analytic gradient vs central finite differences


def test_a4_gradient_matches_central_differences():
    rng = np.random.default_rng(20240804)
    eps = 1e-4
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 9))
        w = rng.normal(size=(n, d))
        b = rng.normal(size=n)
        x = rng.normal(size=(6, d))
        y = rng.integers(0, n, size=6).astype(np.int64)
        gw, gb, _ = backend.kernels.ce_grad_batch(w, b, x, y)

        def loss_at(wm, bm):
            z = x @ wm.T + bm
            z = z - z.max(axis=1, keepdims=True)
            logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
            return -logp[np.arange(x.shape[0]), y].mean()

        for idx in np.ndindex(n, d):
            wp, wm_ = w.copy(), w.copy()
            wp[idx] += eps
            wm_[idx] -= eps
            fd = (loss_at(wp, b) - loss_at(wm_, b)) / (2 * eps)
            worst = max(worst, abs(gw[idx] - fd) / max(abs(gw[idx]), abs(fd), 1e-8))
        for i in range(n):
            bp, bm = b.copy(), b.copy()
            bp[i] += eps
            bm[i] -= eps
            fd = (loss_at(w, bp) - loss_at(w, bm)) / (2 * eps)
            worst = max(worst, abs(gb[i] - fd) / max(abs(gb[i]), abs(fd), 1e-8))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-5, f"max relative gradient error {worst:.2e}"
    assert elapsed < 30.0, f"gradient sweep took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 5: first optimizer step on a scalar with unit gradient


def test_a5_adam_first_step_hand_value():
    lr, eps = 1e-3, 1e-8
    hand = -(lr / (1.0 + eps))
    for choice in ("numpy", "numba"):
        kernels = backend.load_kernels(choice)
        w = np.array([[0.0]])
        b = np.array([0.0])
        m_w, v_w = np.zeros_like(w), np.zeros_like(w)
        m_b, v_b = np.zeros_like(b), np.zeros_like(b)
        kernels.adam_update(
            w, b, m_w, v_w, m_b, v_b,
            np.array([[1.0]]), np.array([0.0]),
            lr, 0.9, 0.999, eps, 1,
        )
        assert abs(w[0, 0] - hand) <= 1e-12, choice
        assert b[0] == 0.0


# ---------------------------------------------------------------------------
# 6: warm starts open near their converged quality; random starts at chance


def test_a6_step0_quality_fraction_and_random_at_chance(comparison):
    reports, elapsed = comparison
    chance = reports[0].chance_f1

    for name in SIMILARITY_METHODS:
        firsts = [r.methods[name].first_macro_f1 for r in reports]
        bests = [r.methods[name].best_macro_f1 for r in reports]
        ratio = float(np.mean(firsts)) / float(np.mean(bests))
        assert ratio >= 0.40, f"{name}: step-0 at {ratio:.1%} of converged best"

    firsts = np.array([r.methods["random"].first_macro_f1 for r in reports])
    se = firsts.std(ddof=1) / np.sqrt(len(firsts))
    assert abs(firsts.mean() - chance) <= 3.0 * se, (
        f"random step-0 {firsts.mean():.4f} vs chance {chance:.4f} (se {se:.4f})"
    )
    assert elapsed < 300.0, f"comparison protocol took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 7: step-0 ranking of the four initializations, with a written report


def test_a7_step0_method_ordering_and_report(comparison, tmp_path):
    reports, _ = comparison
    summary = summarize_comparisons(reports)
    by = {row["method"]: row for row in summary}

    assert by["inference"]["first"] > by["wordnet"]["first"] > by["random"]["first"]
    assert by["inference"]["first"] > by["word2vec"]["first"] > by["random"]["first"]

    csv_path = tmp_path / "comparison.csv"
    txt_path = tmp_path / "comparison.txt"
    write_comparison_csv(summary, str(csv_path))
    txt_path.write_text(format_comparison_table(summary, reports[0].chance_f1))
    assert csv_path.read_text().startswith("method,first,first_std,best,best_std")
    table = txt_path.read_text()
    for name in ("random", "wordnet", "word2vec", "inference"):
        assert name in table


# ---------------------------------------------------------------------------
# 8: behaviour as the training set shrinks


def test_a8_data_reduction_trend(bench_tasks):
    tasks, _ = bench_tasks
    t0 = time.perf_counter()
    cell_lists = [
        run_data_reduction(
            task, REDUCTION_COUNTS, InitSpec(), TrainConfig(seed=task.seed)
        )
        for task in tasks
    ]
    elapsed = time.perf_counter() - t0

    rows = summarize_reduction(cell_lists, REDUCTION_COUNTS)
    by = {(r["images_per_class"], r["method"]): r for r in rows}
    for count in (1, 2):
        random_best = by[(count, "random")]["best"]
        for name in SIMILARITY_METHODS:
            assert by[(count, name)]["best"] >= random_best, (
                f"{name} best {by[(count, name)]['best']:.4f} under random "
                f"{random_best:.4f} at {count}/class"
            )

    # data-independent initializations keep the same step-0 score at every
    # training-set size (exact float equality, per task)
    for cells in cell_lists:
        for name in ("wordnet", "word2vec"):
            firsts = {c.first_macro_f1 for c in cells if c.method == name}
            assert len(firsts) == 1, f"{name} step-0 varies across counts: {firsts}"

    assert elapsed < 600.0, f"reduction protocol took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 9: byte-identical CLI reruns


def _stage_world(tmp_path):
    task = generate_task(
        m_sources=9, n_targets=3, dim=16, samples_per_class=20, seed=3
    )
    stage = tmp_path / "inputs"
    stage.mkdir()
    paths = {
        "taxonomy": stage / "taxonomy.tsv",
        "source_labels": stage / "source_labels.tsv",
        "target_labels": stage / "target_labels.tsv",
        "embeddings": stage / "embeddings.txt",
        "source_head": stage / "source_head.txt",
        "train": stage / "train.txt",
        "test": stage / "test.txt",
        "types": stage / "types.tsv",
    }
    write_taxonomy(task.taxonomy, str(paths["taxonomy"]))
    write_labels(task.source_labels, str(paths["source_labels"]))
    write_labels(task.target_labels, str(paths["target_labels"]))
    write_embeddings(task.embeddings, str(paths["embeddings"]))
    write_head(task.source_head, str(paths["source_head"]))
    write_features(task.train_data, str(paths["train"]))
    write_features(task.test_data, str(paths["test"]))
    write_types(task.target_types, str(paths["types"]))
    return {k: str(v) for k, v in paths.items()}


def _run_pipeline(world, out_dir):
    out_dir.mkdir()
    sim = out_dir / "sim.txt"
    head = out_dir / "head.txt"
    history = out_dir / "history.csv"
    trained = out_dir / "trained.txt"
    cmp_prefix = out_dir / "cmp"
    for args in (
        [
            "sim", "wordnet",
            "--taxonomy", world["taxonomy"],
            "--source-labels", world["source_labels"],
            "--target-labels", world["target_labels"],
            "--out", str(sim),
        ],
        [
            "init",
            "--sim", str(sim),
            "--source-head", world["source_head"],
            "--types", world["types"],
            "--seed", "0",
            "--out", str(head),
        ],
        [
            "train",
            "--head", str(head),
            "--features", world["train"],
            "--eval-features", world["test"],
            "--epochs", "3",
            "--batch-size", "32",
            "--seed", "1",
            "--out", str(history),
            "--out-head", str(trained),
        ],
        [
            "experiment", "compare",
            "--m-sources", "9",
            "--n-targets", "3",
            "--dim", "16",
            "--samples-per-class", "20",
            "--seeds", "2",
            "--epochs", "2",
            "--k-disjoint", "3",
            "--out", str(cmp_prefix),
        ],
    ):
        assert cli_main(args) == 0
    return [sim, head, history, trained,
            cmp_prefix.with_suffix(".csv"), cmp_prefix.with_suffix(".txt")]


def test_a9_cli_rerun_byte_identical(tmp_path, capsys):
    world = _stage_world(tmp_path)
    first = _run_pipeline(world, tmp_path / "run1")
    second = _run_pipeline(world, tmp_path / "run2")
    capsys.readouterr()
    for f1, f2 in zip(first, second):
        assert f1.read_bytes() == f2.read_bytes(), f"{f1.name} differs between reruns"
