"""Command-line interface.

Subcommands mirror the library layers: ``sim`` computes a similarity matrix
(wordnet, word2vec, or inference), ``init`` builds a warm-started or random
target head from one, ``train``/``eval`` run the softmax head on feature
files, and ``experiment`` drives the synthetic-task protocols.  All file
formats are the plain-text ones from ``matrixio``.  Exit codes: 0 on
success, 1 on data or validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiment as expmod
from .embedsim import read_embeddings, word2vec_similarity_matrix
from .infersim import (
    inference_similarity_matrix,
    predict_source,
    read_head,
    write_head,
)
from .matrixio import (
    FormatError,
    read_features,
    read_labels,
    read_matrix,
    read_predictions,
    write_matrix,
)
from .taxonomy import (
    TaxonomyError,
    read_taxonomy,
    read_types,
    wordnet_similarity_matrix,
)
from .trainer import TrainConfig, evaluate, train, write_history
from .warmstart import InitSpec, build_target_head, select_neighbors, xavier_init

_LOG_NEIGHBORS = 5


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"{flag} expects comma-separated integers, got {text!r}") from exc
    if not values or any(v < 1 for v in values):
        raise ValueError(f"{flag} expects positive integers, got {text!r}")
    return values


def _log_neighbors(sim: np.ndarray, target_labels, source_labels) -> None:
    for i in range(sim.shape[0]):
        k = min(_LOG_NEIGHBORS, sim.shape[1])
        picked = select_neighbors(sim, i, k)
        name = target_labels.labels[i]
        if not picked:
            print(f"target {i} {name!r}: no positive similarity")
            continue
        parts = ", ".join(
            f"{source_labels.labels[nb.source]!r}={nb.similarity:.6f}" for nb in picked
        )
        print(f"target {i} {name!r}: {parts}")


def _cmd_sim(args: argparse.Namespace) -> int:
    source_labels = read_labels(args.source_labels)
    target_labels = read_labels(args.target_labels)
    if args.measure == "wordnet":
        taxonomy = read_taxonomy(args.taxonomy)
        sim = wordnet_similarity_matrix(taxonomy, source_labels, target_labels)
    elif args.measure == "word2vec":
        table = read_embeddings(args.embeddings)
        sim = word2vec_similarity_matrix(table, source_labels, target_labels)
    else:
        if args.predictions is not None:
            predictions = read_predictions(args.predictions, source_labels, target_labels)
        else:
            if args.source_head is None or args.features is None:
                raise ValueError(
                    "inference needs --predictions or both --source-head and --features"
                )
            head = read_head(args.source_head)
            data = read_features(args.features)
            if int(data.targets.max()) >= len(target_labels):
                raise ValueError(
                    "feature file contains target classes outside the target label set"
                )
            predictions = predict_source(head, data)
        sim = inference_similarity_matrix(
            predictions, len(target_labels), len(source_labels)
        )
    _log_neighbors(sim, target_labels, source_labels)
    write_matrix(sim, args.out, comment="similarity: rows=targets, cols=sources")
    print(f"wrote {sim.shape[0]}x{sim.shape[1]} similarity matrix to {args.out}")
    return 0


def _cmd_init(args: argparse.Namespace) -> int:
    if args.random:
        if args.n_targets is None:
            raise ValueError("--random needs --n-targets")
        if args.dim is not None:
            dim = args.dim
        elif args.source_head is not None:
            dim = read_head(args.source_head).dim
        else:
            raise ValueError("--random needs --dim or --source-head for the width")
        head = xavier_init(args.n_targets, dim, args.seed)
        write_head(head, args.out)
        print(f"wrote random {head.n_classes}x{head.dim} head to {args.out}")
        return 0

    if args.sim is None or args.source_head is None:
        raise ValueError("init needs --sim and --source-head (or --random)")
    sim = read_matrix(args.sim)
    source_head = read_head(args.source_head)
    n_targets = sim.shape[0]
    if args.types is not None:
        types = read_types(args.types)
        if len(types) != n_targets:
            raise ValueError(
                f"type file lists {len(types)} targets but the similarity matrix "
                f"has {n_targets} rows"
            )
        spec = InitSpec(
            k_disjoint=args.k_disjoint,
            k_included=args.k_included,
            k_inclusive=args.k_inclusive,
            fallback_seed=args.seed,
        )
    else:
        if args.k is None:
            raise ValueError("init needs --types (per-type counts) or a uniform --k")
        from .taxonomy import TargetType

        types = [TargetType.DISJOINT] * n_targets
        spec = InitSpec(
            k_disjoint=args.k,
            k_included=args.k,
            k_inclusive=args.k,
            fallback_seed=args.seed,
        )
    head, selections = build_target_head(source_head, sim, types, spec)
    for i, picked in enumerate(selections):
        if not picked:
            print(f"target {i}: random fallback row (no positive similarity)")
            continue
        parts = ", ".join(
            f"{nb.source}:{nb.coefficient:.4f}(sim {nb.similarity:.4f})" for nb in picked
        )
        print(f"target {i}: {parts}")
    write_head(head, args.out)
    print(f"wrote {head.n_classes}x{head.dim} target head to {args.out}")
    return 0


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        dropout_rate=args.dropout,
        epochs=args.epochs,
        eval_every=args.eval_every,
        seed=args.seed,
    )


def _cmd_train(args: argparse.Namespace) -> int:
    head = read_head(args.head)
    data = read_features(args.features)
    eval_data = read_features(args.eval_features) if args.eval_features else data
    config = _train_config(args)
    trained, history = train(head, data, eval_data, config)
    write_history(history, args.out)
    if args.out_head:
        write_head(trained, args.out_head)
    best = history.best
    print(
        f"trained {history.records[-1].step} steps: "
        f"first macro F1 {history.first.macro_f1:.4f}, "
        f"best {best.macro_f1:.4f} at step {best.step}"
    )
    print(f"wrote metric history to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    head = read_head(args.head)
    data = read_features(args.features)
    result = evaluate(head, data)
    print(f"loss {result.loss:.6f}")
    print(f"macro_f1 {result.macro_f1:.6f}")
    for i, v in enumerate(result.per_class_f1):
        print(f"f1_class_{i} {v:.6f}")
    return 0


def _experiment_spec(args: argparse.Namespace, fallback_seed: int) -> InitSpec:
    return InitSpec(
        k_disjoint=args.k_disjoint,
        k_included=args.k_included,
        k_inclusive=args.k_inclusive,
        fallback_seed=fallback_seed,
    )


def _experiment_tasks(args: argparse.Namespace) -> list:
    tasks = []
    for s in range(args.seeds):
        tasks.append(
            expmod.generate_task(
                args.m_sources,
                args.n_targets,
                args.dim,
                args.samples_per_class,
                seed=args.seed + s,
                semantic_noise=args.semantic_noise,
            )
        )
    return tasks


def _cmd_experiment(args: argparse.Namespace) -> int:
    tasks = _experiment_tasks(args)
    if args.protocol == "compare":
        reports = []
        for task in tasks:
            config = TrainConfig(epochs=args.epochs, seed=task.seed)
            reports.append(
                expmod.run_comparison(task, _experiment_spec(args, task.seed), config)
            )
        summary = expmod.summarize_comparisons(reports)
        table = expmod.format_comparison_table(summary, reports[0].chance_f1)
        expmod.write_comparison_csv(summary, f"{args.out}.csv")
    elif args.protocol == "ksweep":
        k_values = _parse_int_list(args.k_values, "--k-values")
        per_seed = [expmod.run_k_sweep(task, k_values, task.seed) for task in tasks]
        rows = _average_ksweep(per_seed)
        table = expmod.format_ksweep_table(rows)
        expmod.write_ksweep_csv(rows, f"{args.out}.csv")
    else:
        counts = _parse_int_list(args.counts, "--counts")
        cell_lists = []
        for task in tasks:
            config = TrainConfig(epochs=args.epochs, seed=task.seed)
            cell_lists.append(
                expmod.run_data_reduction(
                    task, counts, _experiment_spec(args, task.seed), config
                )
            )
        rows = expmod.summarize_reduction(cell_lists, counts)
        table = expmod.format_reduction_table(rows)
        expmod.write_reduction_csv(rows, f"{args.out}.csv")
    with open(f"{args.out}.txt", "w") as fh:
        fh.write(table)
    print(table, end="")
    print(f"wrote {args.out}.csv and {args.out}.txt")
    return 0


def _average_ksweep(per_seed: list[list]) -> list:
    from .taxonomy import TargetType

    first = per_seed[0]
    rows = []
    for idx, base in enumerate(first):
        same = [cells[idx] for cells in per_seed]
        per_type = {
            kind: float(np.mean([row.per_type[kind] for row in same]))
            for kind in TargetType
            if kind in base.per_type
        }
        rows.append(
            expmod.KSweepRow(
                base.method,
                base.k,
                float(np.mean([row.overall for row in same])),
                per_type,
            )
        )
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="headstart",
        description="Warm-start a softmax classifier head from a source head "
        "using class similarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="compute a target-by-source similarity matrix")
    p_sim.add_argument(
        "measure", choices=["wordnet", "word2vec", "inference"], help="similarity measure"
    )
    p_sim.add_argument("--taxonomy", help="taxonomy edge file (wordnet)")
    p_sim.add_argument("--embeddings", help="word embedding text file (word2vec)")
    p_sim.add_argument("--predictions", help="prediction CSV (inference)")
    p_sim.add_argument("--source-head", help="source head file (inference)")
    p_sim.add_argument("--features", help="target feature file (inference)")
    p_sim.add_argument("--source-labels", required=True, help="source label file")
    p_sim.add_argument("--target-labels", required=True, help="target label file")
    p_sim.add_argument("--out", required=True, help="output matrix file")
    p_sim.set_defaults(func=_cmd_sim)

    p_init = sub.add_parser("init", help="build a target head from a similarity matrix")
    p_init.add_argument("--sim", help="similarity matrix file (rows=targets)")
    p_init.add_argument("--source-head", help="source head file")
    p_init.add_argument("--types", help="per-target type file (index<TAB>type)")
    p_init.add_argument("--k", type=int, help="uniform neighbor count (instead of --types)")
    p_init.add_argument("--k-disjoint", type=int, default=5, help="K for disjoint targets")
    p_init.add_argument("--k-included", type=int, default=2, help="K for included targets")
    p_init.add_argument("--k-inclusive", type=int, default=3, help="K for inclusive targets")
    p_init.add_argument("--random", action="store_true", help="random Xavier head instead")
    p_init.add_argument("--n-targets", type=int, help="rows of the random head")
    p_init.add_argument("--dim", type=int, help="feature width of the random head")
    p_init.add_argument("--seed", type=int, default=0, help="fallback / random-init seed")
    p_init.add_argument("--out", required=True, help="output head file")
    p_init.set_defaults(func=_cmd_init)

    p_train = sub.add_parser("train", help="train a head on a feature file")
    p_train.add_argument("--head", required=True, help="initial head file")
    p_train.add_argument("--features", required=True, help="training feature file")
    p_train.add_argument("--eval-features", help="evaluation feature file (default: training)")
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--dropout", type=float, default=0.75)
    p_train.add_argument("--eval-every", type=int, default=10)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="metric history CSV")
    p_train.add_argument("--out-head", help="also write the trained head here")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a head on a feature file")
    p_eval.add_argument("--head", required=True)
    p_eval.add_argument("--features", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    p_exp = sub.add_parser("experiment", help="synthetic-task protocols")
    p_exp.add_argument(
        "protocol", choices=["compare", "ksweep", "reduce"], help="which protocol to run"
    )
    p_exp.add_argument("--m-sources", type=int, default=30)
    p_exp.add_argument("--n-targets", type=int, default=9)
    p_exp.add_argument("--dim", type=int, default=32)
    p_exp.add_argument("--samples-per-class", type=int, default=100)
    p_exp.add_argument("--seeds", type=int, default=10, help="number of task seeds")
    p_exp.add_argument("--seed", type=int, default=0, help="base seed")
    p_exp.add_argument("--semantic-noise", type=float, default=0.1)
    p_exp.add_argument("--epochs", type=int, default=50)
    p_exp.add_argument("--k-disjoint", type=int, default=5)
    p_exp.add_argument("--k-included", type=int, default=2)
    p_exp.add_argument("--k-inclusive", type=int, default=3)
    p_exp.add_argument("--k-values", default="1,2,3,5,10", help="ksweep neighbor counts")
    p_exp.add_argument("--counts", default="100,50,20,10,5,2,1", help="reduce sample counts")
    p_exp.add_argument("--out", required=True, help="output path prefix")
    p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        FormatError,
        TaxonomyError,
        expmod.TaskGenerationError,
        ValueError,
        KeyError,
        IndexError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
