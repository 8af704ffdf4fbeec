"""Versioned line-oriented text persistence for trained models.

Grammar (see docs/formats.md)::

    vandalstack-model v1
    family <name>
    dim <n_features>
    seed <int>
    param <name> <value>          (sorted by name, seed excluded)
    <family-specific fitted block>
    end

Floats are written with ``repr`` so loading restores them bit-for-bit and
a reloaded model predicts identically to the one saved.
"""

from __future__ import annotations

from pathlib import Path
from typing import IO, Iterator, Sequence, Union

import numpy as np

from ..errors import MalformedLine, UnsupportedFamily
from .boosting import GradientBoostingClassifier
from .forest import ExtraTreesClassifier, RandomForestClassifier
from .linear import LogisticRegression
from .mlp import MLPClassifier
from .tree import Tree

MODEL_HEADER = "vandalstack-model v1"

BUILTIN_FAMILIES = {
    "random_forest": RandomForestClassifier,
    "extra_trees": ExtraTreesClassifier,
    "gradient_boosting": GradientBoostingClassifier,
    "logistic_regression": LogisticRegression,
    "mlp": MLPClassifier,
}


def family_name(model) -> str:
    for name, cls in BUILTIN_FAMILIES.items():
        if type(model) is cls:
            return name
    raise UnsupportedFamily(f"cannot persist a {type(model).__name__}")


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(token: str):
    if token == "None":
        return None
    if token == "True":
        return True
    if token == "False":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _floats_line(tag: str, values: np.ndarray) -> str:
    return tag + " " + " ".join(repr(float(v)) for v in values)


def _parse_floats(rest: str) -> np.ndarray:
    if rest == "":
        return np.zeros(0)
    return np.asarray([float(tok) for tok in rest.split(" ")], dtype=np.float64)


def model_to_lines(model) -> list[str]:
    model._check_is_fitted()
    family = family_name(model)
    lines = [MODEL_HEADER, f"family {family}", f"dim {model.n_features_}"]
    params = model.get_params()
    lines.append(f"seed {params.pop('seed')}")
    for name in sorted(params):
        lines.append(f"param {name} {_format_value(params[name])}")
    if family in ("random_forest", "extra_trees", "gradient_boosting"):
        if family == "gradient_boosting":
            lines.append(f"base_score {model.base_score_!r}")
        lines.append(_floats_line("importances", model.feature_importances_))
        lines.append(f"trees {len(model.trees_)}")
        for tree in model.trees_:
            lines.append(f"tree {tree.n_nodes}")
            for i in range(tree.n_nodes):
                lines.append(
                    "node {} {} {} {} {}".format(
                        tree.feature[i],
                        repr(float(tree.threshold[i])),
                        tree.left[i],
                        tree.right[i],
                        repr(float(tree.value[i])),
                    )
                )
    elif family == "logistic_regression":
        lines.append(f"bias {model.intercept_!r}")
        lines.append(_floats_line("coef", model.coef_))
    else:  # mlp
        lines.append(f"layers {model.n_features_} {model.hidden_units}")
        lines.append(_floats_line("theta", model.theta_))
    lines.append("end")
    return lines


class _LineReader:
    """Sequential reader with one-token dispatch and error positions."""

    def __init__(self, lines: Sequence[str], offset: int = 0):
        self.lines = lines
        self.pos = 0
        self.offset = offset

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise MalformedLine("unexpected end of model block", self.line_no)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect(self, tag: str) -> str:
        line = self.next()
        head, _, rest = line.partition(" ")
        if head != tag:
            raise MalformedLine(f"expected {tag!r}, got {line!r}", self.line_no)
        return rest

    @property
    def line_no(self) -> int:
        return self.offset + self.pos


def model_from_lines(lines: Sequence[str], offset: int = 0):
    reader = _LineReader(lines, offset)
    if reader.next() != MODEL_HEADER:
        raise MalformedLine(f"expected model header {MODEL_HEADER!r}", reader.line_no)
    family = reader.expect("family")
    cls = BUILTIN_FAMILIES.get(family)
    if cls is None:
        raise UnsupportedFamily(f"unknown model family {family!r}")
    dim = int(reader.expect("dim"))
    seed = int(reader.expect("seed"))
    params = {"seed": seed}
    while True:
        line = reader.next()
        if not line.startswith("param "):
            break
        _, name, value = line.split(" ", 2)
        params[name] = _parse_value(value)
    model = cls(**params)
    model.n_features_ = dim
    # `line` now holds the first line of the fitted block
    if family in ("random_forest", "extra_trees", "gradient_boosting"):
        if family == "gradient_boosting":
            head, _, rest = line.partition(" ")
            if head != "base_score":
                raise MalformedLine(f"expected base_score, got {line!r}", reader.line_no)
            model.base_score_ = float(rest)
            line = reader.next()
        head, _, rest = line.partition(" ")
        if head != "importances":
            raise MalformedLine(f"expected importances, got {line!r}", reader.line_no)
        model.feature_importances_ = _parse_floats(rest)
        n_trees = int(reader.expect("trees"))
        model.trees_ = [_tree_from(reader) for _ in range(n_trees)]
    elif family == "logistic_regression":
        head, _, rest = line.partition(" ")
        if head != "bias":
            raise MalformedLine(f"expected bias, got {line!r}", reader.line_no)
        model.intercept_ = float(rest)
        model.coef_ = _parse_floats(reader.expect("coef"))
    else:  # mlp
        head, _, rest = line.partition(" ")
        if head != "layers":
            raise MalformedLine(f"expected layers, got {line!r}", reader.line_no)
        model.theta_ = _parse_floats(reader.expect("theta"))
    if reader.next() != "end":
        raise MalformedLine("model block missing 'end'", reader.line_no)
    if reader.pos != len(reader.lines):
        raise MalformedLine("trailing content after model block", reader.line_no)
    return model


def _tree_from(reader: _LineReader) -> Tree:
    n_nodes = int(reader.expect("tree"))
    feature = np.empty(n_nodes, dtype=np.int64)
    threshold = np.empty(n_nodes, dtype=np.float64)
    left = np.empty(n_nodes, dtype=np.int64)
    right = np.empty(n_nodes, dtype=np.int64)
    value = np.empty(n_nodes, dtype=np.float64)
    for i in range(n_nodes):
        parts = reader.next().split(" ")
        if len(parts) != 6 or parts[0] != "node":
            raise MalformedLine("bad tree node line", reader.line_no)
        feature[i] = int(parts[1])
        threshold[i] = float(parts[2])
        left[i] = int(parts[3])
        right[i] = int(parts[4])
        value[i] = float(parts[5])
    return Tree(feature, threshold, left, right, value)


def save_model(model, path: Union[str, Path, IO[str]]) -> None:
    text = "\n".join(model_to_lines(model)) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load_model(path: Union[str, Path, IO[str]]):
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8", newline="\n") as fh:
            text = fh.read()
    return model_from_lines(text.splitlines())
