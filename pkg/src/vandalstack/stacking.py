"""Stacked generalization: 6 first-stage models -> 4 second-stage -> mean.

First stage: each model spec is trained k times (default k=3), once per
held-out fold, and scores the fold it never saw.  The n x 6 matrix of
out-of-fold probabilities trains the second-stage models — and nothing
else does: the second stage never sees the original features.  The final
score is the arithmetic mean of the second-stage probabilities.

At prediction time each first-stage meta-feature is the mean of that
spec's k fold models (or one refit-on-everything model when
``refit_full`` is set).  Every seed below — fold shuffle, each
(spec, fold) training, each second-stage training — derives from the one
``StackConfig.seed``, so a single integer pins the whole pipeline; the
per-spec ``seed`` field matters only when a spec is trained standalone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyList,
    MalformedLine,
    TooFewExamples,
    UsageError,
)
from .featurize import (
    FeatureSchema,
    FeatureVector,
    schema_from_lines,
    schema_to_lines,
    vectors_to_csr,
)
from .learners import (
    BaseModel,
    ModelSpec,
    model_from_lines,
    model_to_lines,
    project_matrix,
    train,
)
from .learners.base import check_matrix, check_X_y
from .rng import derive_seed, generator

PIPELINE_HEADER = "vandalstack-pipeline v1"


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int


def kfold_assign(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle, then round-robin fold labels over the shuffled order."""
    if k < 2:
        raise UsageError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise TooFewExamples(f"cannot split {n} examples into {k} folds")
    order = generator(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n, dtype=np.int64) % k
    return FoldPlan(k=k, assignment=assignment, seed=seed)


def _default_first_stage() -> tuple[ModelSpec, ...]:
    return (
        ModelSpec("mlp"),
        ModelSpec("extra_trees"),
        ModelSpec("extra_trees", {"n_estimators": 200}),
        ModelSpec("gradient_boosting"),
        ModelSpec("gradient_boosting", {"n_estimators": 200}),
        ModelSpec("logistic_regression"),
    )


def _default_second_stage() -> tuple[ModelSpec, ...]:
    return (
        ModelSpec("random_forest", {"n_estimators": 200, "max_depth": 8}),
        ModelSpec("mlp"),
        ModelSpec("gradient_boosting", {"n_estimators": 200, "max_depth": 6}),
        ModelSpec("gradient_boosting"),
    )


@dataclass(frozen=True)
class StackConfig:
    first_stage: tuple[ModelSpec, ...] = field(default_factory=_default_first_stage)
    second_stage: tuple[ModelSpec, ...] = field(default_factory=_default_second_stage)
    k: int = 3
    seed: int = 0
    refit_full: bool = False

    def __post_init__(self):
        if not self.first_stage or not self.second_stage:
            raise UsageError("both model stages must be non-empty")
        object.__setattr__(self, "first_stage", tuple(self.first_stage))
        object.__setattr__(self, "second_stage", tuple(self.second_stage))


def default_stack_config(seed: int = 0, k: int = 3, refit_full: bool = False) -> StackConfig:
    return StackConfig(k=k, seed=seed, refit_full=refit_full)


@dataclass
class StackedPipeline:
    """Everything needed to score a revision, plus training diagnostics.

    ``schema``/``selected`` are optional: when present, predict accepts
    full-width encoded vectors and projects internally; when absent the
    input must already have the width the models were fit on.  ``oof_``
    (the training-time out-of-fold meta-feature matrix) is a diagnostic
    and is not persisted.
    """

    config: StackConfig
    fold_models: tuple[tuple[BaseModel, ...], ...]
    second_models: tuple[BaseModel, ...]
    full_models: Optional[tuple[BaseModel, ...]] = None
    schema: Optional[FeatureSchema] = None
    selected: Optional[tuple[int, ...]] = None
    oof_: Optional[np.ndarray] = None


def fit_stack(
    X,
    y,
    config: StackConfig,
    schema: Optional[FeatureSchema] = None,
    selected: Optional[Sequence[int]] = None,
) -> StackedPipeline:
    """Train the full stack on encoded data.

    ``X`` is the full-width matrix (or FeatureVector sequence); when
    ``selected`` is given the projection is applied here and again inside
    every predict call, keeping train and serve paths identical.
    """
    Xmat, labels = check_X_y(X, y)
    if schema is not None and Xmat.shape[1] != schema.total_dim:
        raise DimensionMismatch(
            f"matrix width {Xmat.shape[1]} != schema dim {schema.total_dim}"
        )
    if selected is not None:
        selected = tuple(int(j) for j in selected)
        Xmat = project_matrix(Xmat, selected)
    n = Xmat.shape[0]
    plan = kfold_assign(n, config.k, derive_seed(config.seed, "folds", 0))
    n_first = len(config.first_stage)
    oof = np.zeros((n, n_first))
    fold_models = []
    for j, spec in enumerate(config.first_stage):
        per_fold = []
        for f in range(config.k):
            train_rows = plan.assignment != f
            model = train(
                spec,
                Xmat[train_rows],
                labels[train_rows],
                seed=derive_seed(config.seed, "first-stage", j * config.k + f),
            )
            oof[~train_rows, j] = model.predict_proba(Xmat[~train_rows])
            per_fold.append(model)
        fold_models.append(tuple(per_fold))
    second_models = tuple(
        train(spec, oof, labels, seed=derive_seed(config.seed, "second-stage", j))
        for j, spec in enumerate(config.second_stage)
    )
    full_models = None
    if config.refit_full:
        full_models = tuple(
            train(spec, Xmat, labels, seed=derive_seed(config.seed, "first-full", j))
            for j, spec in enumerate(config.first_stage)
        )
    return StackedPipeline(
        config=config,
        fold_models=tuple(fold_models),
        second_models=second_models,
        full_models=full_models,
        schema=schema,
        selected=tuple(selected) if selected is not None else None,
        oof_=oof,
    )


def stack_meta_features(pipeline: StackedPipeline, X) -> np.ndarray:
    """Meta-feature matrix for already-projected input.

    Column j is the mean of spec j's k fold models (or its single
    refit-on-all model when the pipeline was built with ``refit_full``).
    """
    Xmat = check_matrix(X)
    n_first = len(pipeline.config.first_stage)
    meta = np.zeros((Xmat.shape[0], n_first))
    if pipeline.full_models is not None:
        for j, model in enumerate(pipeline.full_models):
            meta[:, j] = model.predict_proba(Xmat)
        return meta
    for j, per_fold in enumerate(pipeline.fold_models):
        acc = np.zeros(Xmat.shape[0])
        for model in per_fold:
            acc += model.predict_proba(Xmat)
        meta[:, j] = acc / len(per_fold)
    return meta


def predict_stack_batch(pipeline: StackedPipeline, X) -> np.ndarray:
    """Scores for full-width input (projection applied internally)."""
    Xmat = check_matrix(X)
    if pipeline.schema is not None and Xmat.shape[1] != pipeline.schema.total_dim:
        raise DimensionMismatch(
            f"input width {Xmat.shape[1]} != schema dim {pipeline.schema.total_dim}"
        )
    if pipeline.selected is not None:
        Xmat = project_matrix(Xmat, pipeline.selected)
    meta = stack_meta_features(pipeline, Xmat)
    scores = np.zeros((meta.shape[0], len(pipeline.second_models)))
    for j, model in enumerate(pipeline.second_models):
        scores[:, j] = model.predict_proba(meta)
    return scores.mean(axis=1)


def predict_stack(pipeline: StackedPipeline, x: FeatureVector) -> float:
    return float(predict_stack_batch(pipeline, vectors_to_csr([x]))[0])


def mean_ensemble(scores: Sequence[float]) -> float:
    scores = list(scores)
    if not scores:
        raise EmptyList("mean_ensemble needs at least one score")
    return float(sum(scores) / len(scores))


# ---------------------------------------------------------------------------
# Pipeline container: one text file bundling config, schema, selection and
# every model block, with explicit section framing.

def _spec_to_json(spec: ModelSpec) -> str:
    return json.dumps(
        {
            "family": spec.family,
            "hyperparameters": dict(spec.hyperparameters),
            "seed": spec.seed,
        },
        sort_keys=True,
    )


def _spec_from_json(text: str) -> ModelSpec:
    raw = json.loads(text)
    return ModelSpec(raw["family"], raw["hyperparameters"], raw["seed"])


def pipeline_to_lines(pipeline: StackedPipeline) -> list[str]:
    cfg = pipeline.config
    lines = [
        PIPELINE_HEADER,
        f"k {cfg.k}",
        f"seed {cfg.seed}",
        f"refit_full {1 if cfg.refit_full else 0}",
        f"first_stage {len(cfg.first_stage)}",
        f"second_stage {len(cfg.second_stage)}",
    ]
    for j, spec in enumerate(cfg.first_stage):
        lines.append(f"spec first {j} {_spec_to_json(spec)}")
    for j, spec in enumerate(cfg.second_stage):
        lines.append(f"spec second {j} {_spec_to_json(spec)}")
    if pipeline.selected is None:
        lines.append("selected none")
    elif len(pipeline.selected) == 0:
        lines.append("selected empty")
    else:
        lines.append("selected " + " ".join(str(j) for j in pipeline.selected))

    def add_section(name: str, body: list[str]) -> None:
        lines.append(f"section {name} {len(body)}")
        lines.extend(body)

    if pipeline.schema is not None:
        add_section("schema", schema_to_lines(pipeline.schema))
    for j, per_fold in enumerate(pipeline.fold_models):
        for f, model in enumerate(per_fold):
            add_section(f"model first {j} {f}", model_to_lines(model))
    if pipeline.full_models is not None:
        for j, model in enumerate(pipeline.full_models):
            add_section(f"model full {j}", model_to_lines(model))
    for j, model in enumerate(pipeline.second_models):
        add_section(f"model second {j}", model_to_lines(model))
    lines.append("end")
    return lines


def pipeline_from_lines(lines: Sequence[str]) -> StackedPipeline:
    if not lines or lines[0] != PIPELINE_HEADER:
        raise MalformedLine(f"expected pipeline header {PIPELINE_HEADER!r}", 1)
    pos = 1

    def take(tag: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise MalformedLine("unexpected end of pipeline file", pos + 1)
        head, _, rest = lines[pos].partition(" ")
        if head != tag:
            raise MalformedLine(f"expected {tag!r}, got {lines[pos]!r}", pos + 1)
        pos += 1
        return rest

    k = int(take("k"))
    seed = int(take("seed"))
    refit_full = take("refit_full") == "1"
    n_first = int(take("first_stage"))
    n_second = int(take("second_stage"))
    first = []
    for j in range(n_first):
        rest = take("spec")
        stage, idx, payload = rest.split(" ", 2)
        if stage != "first" or int(idx) != j:
            raise MalformedLine(f"unexpected spec line order at {rest!r}", pos)
        first.append(_spec_from_json(payload))
    second = []
    for j in range(n_second):
        rest = take("spec")
        stage, idx, payload = rest.split(" ", 2)
        if stage != "second" or int(idx) != j:
            raise MalformedLine(f"unexpected spec line order at {rest!r}", pos)
        second.append(_spec_from_json(payload))
    selected_raw = take("selected")
    if selected_raw == "none":
        selected = None
    elif selected_raw == "empty":
        selected = ()
    else:
        selected = tuple(int(tok) for tok in selected_raw.split(" "))

    sections: list[tuple[str, list[str]]] = []
    while pos < len(lines) and lines[pos] != "end":
        head, _, rest = lines[pos].partition(" ")
        if head != "section":
            raise MalformedLine(f"expected section, got {lines[pos]!r}", pos + 1)
        name, _, count_raw = rest.rpartition(" ")
        count = int(count_raw)
        body = list(lines[pos + 1 : pos + 1 + count])
        if len(body) != count:
            raise MalformedLine(f"truncated section {name!r}", pos + 1)
        sections.append((name, body))
        pos += 1 + count
    if pos >= len(lines) or lines[pos] != "end":
        raise MalformedLine("pipeline file missing 'end'", pos + 1)

    schema = None
    fold_models: dict[tuple[int, int], BaseModel] = {}
    full_models: dict[int, BaseModel] = {}
    second_models: dict[int, BaseModel] = {}
    for name, body in sections:
        parts = name.split(" ")
        if parts == ["schema"]:
            schema = schema_from_lines(body)
        elif parts[0] == "model" and parts[1] == "first":
            fold_models[(int(parts[2]), int(parts[3]))] = model_from_lines(body)
        elif parts[0] == "model" and parts[1] == "full":
            full_models[int(parts[2])] = model_from_lines(body)
        elif parts[0] == "model" and parts[1] == "second":
            second_models[int(parts[2])] = model_from_lines(body)
        else:
            raise MalformedLine(f"unknown pipeline section {name!r}")

    config = StackConfig(
        first_stage=tuple(first),
        second_stage=tuple(second),
        k=k,
        seed=seed,
        refit_full=refit_full,
    )
    return StackedPipeline(
        config=config,
        fold_models=tuple(
            tuple(fold_models[(j, f)] for f in range(k)) for j in range(n_first)
        ),
        second_models=tuple(second_models[j] for j in range(n_second)),
        full_models=(
            tuple(full_models[j] for j in range(n_first)) if full_models else None
        ),
        schema=schema,
        selected=selected,
    )


def save_pipeline(pipeline: StackedPipeline, path: Union[str, Path, IO[str]]) -> None:
    text = "\n".join(pipeline_to_lines(pipeline)) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load_pipeline(path: Union[str, Path, IO[str]]) -> StackedPipeline:
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8", newline="\n") as fh:
            text = fh.read()
    return pipeline_from_lines(text.splitlines())
