"""Command-line entry point wiring every module into subcommands.

    vandalstack ingest      parse + join a corpus and truth file, print counts
    vandalstack sample      under-sample and dedup, write reduced corpus/truth
    vandalstack train       fit one model family on a corpus (debug utility)
    vandalstack train-stack full training flow from a config file
    vandalstack predict     score a corpus with a saved pipeline
    vandalstack evaluate    AUC + error report from a scores file
    vandalstack analyze     evaluate plus histogram/error/MDS data files
    vandalstack serve       one-session scoring server
    vandalstack client      answer a scoring session with a saved pipeline

Every artifact is deterministic: rerunning a subcommand with the same
inputs and seeds writes byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig, load_run_config
from .corpus import (
    join_labels,
    load_corpus,
    load_labels,
    write_corpus,
    write_labels,
)
from .errors import UsageError, VandalstackError
from .evaluation import (
    MDS_CAP,
    EvalReport,
    ScoredExample,
    classical_mds,
    error_sets,
    evaluate_scored,
    histogram_rows,
    load_scores,
)
from .featurize import (
    build_schema,
    encode,
    encode_many,
    extract_features,
    extract_many,
    load_schema,
    save_schema,
    vectors_to_csr,
)
from .learners import (
    ModelSpec,
    default_spec,
    feature_importances,
    optimized_spec,
    save_model,
    select_features,
    train,
)
from .sampling import dedup, undersample
from .serve import format_score, run_client, run_server
from .stacking import (
    StackConfig,
    fit_stack,
    load_pipeline,
    predict_stack_batch,
    save_pipeline,
)

_FORMAT_VERSIONS = "schema v1, model v1, pipeline v1"


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VandalstackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vandalstack",
        description="Stacked-ensemble vandalism scoring for revision streams.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"vandalstack {__version__} ({_FORMAT_VERSIONS})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus, join labels, print counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--malformed", choices=["skip", "abort"], default="skip")
    p.add_argument("--output", help="write the parsed corpus back out (normalised)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("sample", help="under-sample negatives and drop duplicates")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output-corpus", required=True)
    p.add_argument("--output-truth", required=True)
    p.add_argument("--fraction", default="1/50")
    p.add_argument("--window", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dedup-order", choices=["after", "before"], default="after")
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--malformed", choices=["skip", "abort"], default="skip")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train", help="fit a single model family (debug utility)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument(
        "--model",
        required=True,
        choices=[
            "random_forest",
            "extra_trees",
            "gradient_boosting",
            "logistic_regression",
            "mlp",
        ],
    )
    p.add_argument("--preset", choices=["default", "optimized"], default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--schema", help="also write the feature schema here")
    p.add_argument("--malformed", choices=["skip", "abort"], default="skip")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("train-stack", help="full training flow from a config file")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--corpus")
    p.add_argument("--truth")
    p.add_argument("--schema")
    p.add_argument("--pipeline")
    p.add_argument("--master-seed", dest="master_seed")
    p.add_argument("--fraction", dest="sampling_fraction")
    p.add_argument("--window", dest="sampling_window")
    p.add_argument("--dedup-order", dest="dedup_order", choices=["after", "before"])
    p.add_argument("--threshold", dest="selection_threshold")
    p.add_argument("--k", dest="stack_k")
    p.add_argument("--malformed", choices=["skip", "abort"])
    p.set_defaults(func=_cmd_train_stack)

    p = sub.add_parser("predict", help="score a corpus with a saved pipeline")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--malformed", choices=["skip", "abort"], default="skip")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="AUC and error report for a scores file")
    p.add_argument("--scores", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--mds", help="write an error-embedding TSV here")
    p.add_argument("--corpus", help="corpus for feature-vector dedup / MDS")
    p.add_argument("--schema", help="schema matching --corpus")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze", help="evaluate + histogram/error/MDS data files")
    p.add_argument("--scores", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--corpus")
    p.add_argument("--schema")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("serve", help="serve one scoring session over TCP")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--listen", default="127.0.0.1:0")
    p.add_argument("--window", type=int, default=16)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--report", help="write the session report here (default stdout)")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("client", help="answer a scoring session")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--connect", required=True)
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=_cmd_client)

    return parser


def _load_joined(corpus_path: str, truth_path: str, malformed: str):
    loaded = load_corpus(corpus_path, on_malformed=malformed)
    labels = load_labels(truth_path)
    joined = join_labels(loaded.revisions, labels)
    return loaded, labels, joined


def _cmd_ingest(args) -> int:
    loaded, _, joined = _load_joined(args.corpus, args.truth, args.malformed)
    positives = sum(1 for ex in joined.examples if ex.label)
    print(f"revisions {len(loaded.revisions)}")
    print(f"malformed {loaded.malformed_count}")
    print(f"labeled {len(joined.examples)}")
    print(f"unlabeled {joined.unlabeled_count}")
    print(f"positives {positives}")
    print(f"negatives {len(joined.examples) - positives}")
    if args.output:
        write_corpus(loaded.revisions, args.output)
    return 0


def _cmd_sample(args) -> int:
    from .sampling import SamplingConfig

    _, _, joined = _load_joined(args.corpus, args.truth, args.malformed)
    window = None if args.window == "all" else int(args.window)
    config = SamplingConfig(fraction=args.fraction, window=window, seed=args.seed)
    examples = joined.examples
    if not args.no_dedup and args.dedup_order == "before":
        examples = dedup(examples)
    examples = undersample(examples, config)
    if not args.no_dedup and args.dedup_order == "after":
        examples = dedup(examples)
    write_corpus((ex.revision for ex in examples), args.output_corpus)
    write_labels(examples, args.output_truth)
    positives = sum(1 for ex in examples if ex.label)
    print(f"kept {len(examples)} examples ({positives} positive)")
    return 0


def _cmd_train(args) -> int:
    _, _, joined = _load_joined(args.corpus, args.truth, args.malformed)
    if not joined.examples:
        raise UsageError("no labeled examples to train on")
    revisions = [ex.revision for ex in joined.examples]
    labels = [ex.label for ex in joined.examples]
    raws = extract_many(revisions)
    schema = build_schema(raws)
    if args.schema:
        save_schema(schema, args.schema)
    X = vectors_to_csr(encode_many(raws, schema))
    spec = (
        default_spec(args.model, args.seed)
        if args.preset == "default"
        else optimized_spec(args.model, args.seed)
    )
    model = train(spec, X, labels)
    save_model(model, args.output)
    print(f"trained {args.model} ({args.preset}) on {X.shape[0]} examples, dim {X.shape[1]}")
    return 0


def _run_config_from_args(args) -> RunConfig:
    overrides = {
        "corpus": args.corpus,
        "truth": args.truth,
        "schema": args.schema,
        "pipeline": args.pipeline,
        "master_seed": args.master_seed,
        "sampling.fraction": args.sampling_fraction,
        "sampling.window": args.sampling_window,
        "sampling.dedup_order": args.dedup_order,
        "selection.threshold": args.selection_threshold,
        "stack.k": args.stack_k,
        "malformed": args.malformed,
    }
    return load_run_config(args.config, overrides)


def _cmd_train_stack(args) -> int:
    cfg = _run_config_from_args(args)
    if cfg.corpus is None or cfg.truth is None:
        raise UsageError("train-stack needs corpus and truth paths")
    if cfg.pipeline is None:
        raise UsageError("train-stack needs a pipeline output path")
    _, _, joined = _load_joined(cfg.corpus, cfg.truth, cfg.malformed)
    examples = joined.examples
    if not examples:
        raise UsageError("no labeled examples to train on")
    if cfg.dedup and cfg.dedup_order == "before":
        examples = dedup(examples)
    examples = undersample(examples, cfg.sampling_config())
    if cfg.dedup and cfg.dedup_order == "after":
        examples = dedup(examples)
    revisions = [ex.revision for ex in examples]
    labels = [ex.label for ex in examples]

    raws = extract_many(revisions)
    schema = build_schema(raws)
    save_schema(schema, cfg.schema_path())
    X = vectors_to_csr(encode_many(raws, schema))

    selection_model = train(
        ModelSpec("gradient_boosting", {}, cfg.selection_seed), X, labels
    )
    report = feature_importances(selection_model)
    selected = select_features(report, cfg.selection_threshold)
    if not selected:
        raise UsageError(
            "feature selection removed every column; lower selection.threshold"
        )

    stack_config = StackConfig(
        k=cfg.stack_k, seed=cfg.stack_seed(), refit_full=cfg.refit_full
    )
    pipeline = fit_stack(X, labels, stack_config, schema=schema, selected=selected)
    save_pipeline(pipeline, cfg.pipeline)
    print(f"training examples {len(examples)}")
    print(f"encoded dim {schema.total_dim}")
    print(f"selected {len(selected)}")
    print(f"schema {cfg.schema_path()}")
    print(f"pipeline {cfg.pipeline}")
    return 0


def _cmd_predict(args) -> int:
    pipeline = load_pipeline(args.pipeline)
    if pipeline.schema is None:
        raise UsageError("pipeline has no embedded schema; cannot featurize")
    loaded = load_corpus(args.input, on_malformed=args.malformed)
    raws = extract_many(loaded.revisions)
    vectors = encode_many(raws, pipeline.schema)
    X = vectors_to_csr(vectors, dim=pipeline.schema.total_dim)
    scores = predict_stack_batch(pipeline, X)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for rev, score in zip(loaded.revisions, scores):
            fh.write(f"{rev.rev_id}\t{format_score(float(score))}\n")
    if loaded.malformed_count:
        print(f"skipped {loaded.malformed_count} malformed lines", file=sys.stderr)
    print(f"scored {len(loaded.revisions)} revisions -> {args.output}")
    return 0


def _join_scored(scores: dict[int, float], labels: dict[int, bool]):
    scored = []
    missing = 0
    for rev_id in sorted(scores):
        label = labels.get(rev_id)
        if label is None:
            missing += 1
        else:
            scored.append(ScoredExample(rev_id, scores[rev_id], label))
    return scored, missing


def _vectors_for(corpus_path: str, schema_path: str, malformed: str = "skip"):
    schema = load_schema(schema_path)
    loaded = load_corpus(corpus_path, on_malformed=malformed)
    return {
        rev.rev_id: encode(extract_features(rev), schema) for rev in loaded.revisions
    }


def _write_report(report: EvalReport, fh) -> None:
    fh.write(f"examples {report.n}\n")
    fh.write(f"positives {report.positives}\n")
    fh.write(f"negatives {report.negatives}\n")
    fh.write(f"auc {report.auc!r}\n")
    fh.write(f"misclassified {report.misclassified_count}\n")
    fh.write(f"fp_total {report.fp_total}\n")
    fh.write(f"fn_total {report.fn_total}\n")
    if report.fp_distinct is not None:
        fh.write(f"fp_distinct {report.fp_distinct}\n")
    if report.fn_distinct is not None:
        fh.write(f"fn_distinct {report.fn_distinct}\n")
    fh.write("histogram\n")
    for lo, hi, count in histogram_rows(report.histogram):
        fh.write(f"{lo!r}\t{hi!r}\t{count}\n")


def _write_mds(scored, vectors, threshold: float, path: str) -> None:
    errors = error_sets(scored, threshold, vectors)
    tagged = [(rev_id, "FP") for rev_id in errors.fp]
    tagged += [(rev_id, "FN") for rev_id in errors.fn]
    tagged.sort()
    tagged = tagged[:MDS_CAP]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if not tagged:
            return
        coords = classical_mds([vectors[rev_id] for rev_id, _ in tagged])
        for (rev_id, tag), (x, y) in zip(tagged, coords):
            fh.write(f"{rev_id}\t{float(x)!r}\t{float(y)!r}\t{tag}\n")


def _cmd_evaluate(args) -> int:
    scores = load_scores(args.scores)
    labels = load_labels(args.truth)
    scored, missing = _join_scored(scores, labels)
    if missing:
        print(f"warning: {missing} scored rev_ids have no label", file=sys.stderr)
    if not scored:
        raise UsageError("no scored examples with labels")
    vectors = None
    if args.corpus and args.schema:
        vectors = _vectors_for(args.corpus, args.schema)
    elif args.mds:
        raise UsageError("--mds needs --corpus and --schema for feature vectors")
    report = evaluate_scored(scored, vectors, args.threshold)
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        _write_report(report, fh)
    if args.mds:
        _write_mds(scored, vectors, args.threshold, args.mds)
    print(f"auc {report.auc!r}")
    return 0


def _cmd_analyze(args) -> int:
    scores = load_scores(args.scores)
    labels = load_labels(args.truth)
    scored, missing = _join_scored(scores, labels)
    if missing:
        print(f"warning: {missing} scored rev_ids have no label", file=sys.stderr)
    if not scored:
        raise UsageError("no scored examples with labels")
    vectors = None
    if args.corpus and args.schema:
        vectors = _vectors_for(args.corpus, args.schema)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = evaluate_scored(scored, vectors, args.threshold)
    with open(out_dir / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        _write_report(report, fh)
    with open(out_dir / "histogram.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for lo, hi, count in histogram_rows(report.histogram):
            fh.write(f"{lo!r}\t{hi!r}\t{count}\n")
    errors = error_sets(scored, args.threshold, vectors)
    distinct_fp = set(errors.fp_distinct)
    distinct_fn = set(errors.fn_distinct)
    with open(out_dir / "errors.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for rev_id in errors.fp:
            fh.write(f"{rev_id}\tFP\t{1 if rev_id in distinct_fp else 0}\n")
        for rev_id in errors.fn:
            fh.write(f"{rev_id}\tFN\t{1 if rev_id in distinct_fn else 0}\n")
    if vectors is not None:
        _write_mds(scored, vectors, args.threshold, str(out_dir / "mds.tsv"))
    print(f"auc {report.auc!r}")
    print(f"wrote {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    result = run_server(
        args.corpus,
        args.truth,
        listen=args.listen,
        window=args.window,
        timeout=args.timeout,
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            _write_report(result.report, fh)
    else:
        _write_report(result.report, sys.stdout)
    return 0


def _cmd_client(args) -> int:
    return run_client(args.pipeline, args.connect, timeout=args.timeout)


if __name__ == "__main__":
    raise SystemExit(main())
