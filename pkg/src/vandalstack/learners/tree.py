"""One CART-style binary tree, grown directly on a sparse column matrix.

The same builder serves every tree family in the package: classification
trees split on Gini impurity, the regression trees inside the boosting
model split on variance, and the extremely-randomised variant draws one
uniform threshold per candidate feature instead of scanning.  What a leaf
stores is up to the caller (positive fraction, mean target, or a Newton
step), supplied as a callback.

Column values for the samples that reached a node are gathered on demand
from the CSC structure; the training matrix is never densified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse


@dataclass
class Tree:
    """Flat-array binary tree.  ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_dense(self, Xd: np.ndarray) -> np.ndarray:
        """Evaluate every row of a dense block.

        Wide blocks take a vectorised frontier walk; tiny blocks (streaming
        one revision at a time) walk node-by-node in plain Python, which is
        far cheaper than per-level array dispatch.  Both paths perform the
        identical ``value <= threshold`` float64 comparisons, so they agree
        bit for bit.
        """
        if Xd.shape[0] <= 8:
            return self._predict_scalar(Xd)
        node = np.zeros(Xd.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            feat = self.feature[cur]
            go_left = Xd[rows, feat] <= self.threshold[cur]
            nxt = np.where(go_left, self.left[cur], self.right[cur])
            node[rows] = nxt
            active[rows] = self.feature[nxt] >= 0
        return self.value[node]

    def _predict_scalar(self, Xd: np.ndarray) -> np.ndarray:
        cache = getattr(self, "_lists", None)
        if cache is None:
            cache = (
                self.feature.tolist(),
                self.threshold.tolist(),
                self.left.tolist(),
                self.right.tolist(),
                self.value.tolist(),
            )
            self._lists = cache
        feature, threshold, left, right, value = cache
        out = np.empty(Xd.shape[0], dtype=np.float64)
        for i in range(Xd.shape[0]):
            row = Xd[i]
            nid = 0
            j = feature[0]
            while j >= 0:
                nid = left[nid] if row[j] <= threshold[nid] else right[nid]
                j = feature[nid]
            out[i] = value[nid]
        return out


def column_values(Xc: sparse.csc_matrix, j: int, row_ids: np.ndarray) -> np.ndarray:
    """Dense values of column ``j`` at ``row_ids`` (repeats allowed)."""
    start, stop = Xc.indptr[j], Xc.indptr[j + 1]
    out = np.zeros(row_ids.size, dtype=np.float64)
    if start == stop:
        return out
    col_rows = Xc.indices[start:stop]
    pos = np.searchsorted(col_rows, row_ids)
    hit = pos < col_rows.size
    hit[hit] = col_rows[pos[hit]] == row_ids[hit]
    out[hit] = Xc.data[start:stop][pos[hit]]
    return out


def _impurity_gain(t: np.ndarray, mask: np.ndarray, criterion: str) -> float:
    """Impurity decrease of splitting ``t`` by ``mask`` (left = True)."""
    n = t.size
    nl = int(mask.sum())
    nr = n - nl
    if nl == 0 or nr == 0:
        return -np.inf
    total = float(t.sum())
    sl = float(t[mask].sum())
    sr = total - sl
    if criterion == "gini":
        def gini(cnt: int, s: float) -> float:
            p = s / cnt
            return 2.0 * p * (1.0 - p)

        return gini(n, total) - (nl * gini(nl, sl) + nr * gini(nr, sr)) / n
    # variance criterion: decrease reduces to a sum-of-squares identity
    return (sl * sl / nl + sr * sr / nr) / n - (total / n) ** 2


def best_split_exact(
    v: np.ndarray, t: np.ndarray, criterion: str
) -> Optional[tuple[float, float]]:
    """Scan every boundary between consecutive distinct values of ``v``.

    Returns ``(gain, threshold)`` for the best boundary, preferring the
    lowest threshold on ties, or ``None`` when ``v`` is constant.
    """
    order = np.argsort(v, kind="mergesort")
    vs = v[order]
    ts = t[order]
    cut = np.nonzero(vs[1:] > vs[:-1])[0] + 1
    if cut.size == 0:
        return None
    csum = np.cumsum(ts)
    n = v.size
    total = csum[-1]
    nl = cut.astype(np.float64)
    nr = n - nl
    sl = csum[cut - 1]
    sr = total - sl
    if criterion == "gini":
        parent = 2.0 * (total / n) * (1.0 - total / n)
        gl = 2.0 * (sl / nl) * (1.0 - sl / nl)
        gr = 2.0 * (sr / nr) * (1.0 - sr / nr)
        gains = parent - (nl * gl + nr * gr) / n
    else:
        gains = (sl * sl / nl + sr * sr / nr) / n - (total / n) ** 2
    k = int(np.argmax(gains))
    lo, hi = vs[cut[k] - 1], vs[cut[k]]
    threshold = 0.5 * (lo + hi)
    if not lo <= threshold < hi:
        threshold = lo
    return float(gains[k]), float(threshold)


def random_split(
    v: np.ndarray, t: np.ndarray, criterion: str, rng: np.random.Generator
) -> Optional[tuple[float, float]]:
    """One uniform threshold in ``[min(v), max(v))`` — the extra-trees rule."""
    lo = float(v.min())
    hi = float(v.max())
    if lo == hi:
        return None
    threshold = float(rng.uniform(lo, hi))
    if not lo <= threshold < hi:
        threshold = lo
    gain = _impurity_gain(t, v <= threshold, criterion)
    if not np.isfinite(gain):
        return None
    return gain, threshold


class TreeBuilder:
    """Grows one tree.  Construction parameters, not fitted state.

    criterion
        ``"gini"`` (binary 0/1 targets) or ``"variance"`` (real targets).
    max_features
        Number of candidate features drawn (without replacement) per
        node; ``None`` means all.
    random_threshold
        Replace the exact scan with one uniform threshold per candidate.
    """

    def __init__(
        self,
        criterion: str,
        max_depth: Optional[int],
        max_features: Optional[int],
        rng: np.random.Generator,
        random_threshold: bool = False,
    ):
        if criterion not in ("gini", "variance"):
            raise ValueError(f"unknown criterion {criterion!r}")
        self.criterion = criterion
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng
        self.random_threshold = random_threshold

    def build(
        self,
        Xc: sparse.csc_matrix,
        rows: np.ndarray,
        target: np.ndarray,
        leaf_value: Callable[[np.ndarray], float],
        importances: Optional[np.ndarray] = None,
    ) -> tuple[Tree, np.ndarray]:
        """Grow a tree over ``rows`` of ``Xc`` (repeats allowed, e.g. bootstrap).

        ``target[i]`` belongs to ``rows[i]``; ``leaf_value`` receives the
        positions (into ``rows``) that land in a leaf.  Returns the tree
        and, per position, the id of the leaf it reached.  When given,
        ``importances`` accumulates weighted impurity decreases per
        feature (caller normalises).
        """
        n_total = rows.size
        d = Xc.shape[1]
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        leaf_of = np.full(n_total, -1, dtype=np.int64)

        def new_node() -> int:
            feature.append(-1)
            threshold.append(np.nan)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            return len(feature) - 1

        root = new_node()
        stack: list[tuple[int, np.ndarray, int]] = [
            (root, np.arange(n_total, dtype=np.int64), 0)
        ]
        while stack:
            nid, sel, depth = stack.pop()
            t = target[sel]
            can_split = (
                sel.size >= 2
                and (self.max_depth is None or depth < self.max_depth)
                and not np.all(t == t[0])
            )
            split = self._find_split(Xc, rows, sel, t, d) if can_split else None
            if split is None:
                value[nid] = float(leaf_value(sel))
                leaf_of[sel] = nid
                continue
            gain, j, thr, go_left = split
            if importances is not None:
                importances[j] += (sel.size / n_total) * gain
            feature[nid] = j
            threshold[nid] = thr
            left_id = new_node()
            right_id = new_node()
            left[nid] = left_id
            right[nid] = right_id
            stack.append((right_id, sel[~go_left], depth + 1))
            stack.append((left_id, sel[go_left], depth + 1))

        tree = Tree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=np.float64),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.float64),
        )
        return tree, leaf_of

    def _find_split(
        self,
        Xc: sparse.csc_matrix,
        rows: np.ndarray,
        sel: np.ndarray,
        t: np.ndarray,
        d: int,
    ) -> Optional[tuple[float, int, float, np.ndarray]]:
        if self.max_features is None or self.max_features >= d:
            candidates = np.arange(d)
        else:
            candidates = np.sort(
                self.rng.choice(d, size=self.max_features, replace=False)
            )
        node_rows = rows[sel]
        best: Optional[tuple[float, int, float]] = None
        for j in candidates:
            v = column_values(Xc, int(j), node_rows)
            if self.random_threshold:
                found = random_split(v, t, self.criterion, self.rng)
            else:
                found = best_split_exact(v, t, self.criterion)
            if found is None:
                continue
            gain, thr = found
            # zero-gain splits are kept: a boundary that does not reduce
            # impurity can still expose one deeper down (the XOR pattern),
            # so only constant columns and pure nodes stop the recursion
            if gain >= 0.0 and (best is None or gain > best[0]):
                best = (gain, int(j), thr)
        if best is None:
            return None
        gain, j, thr = best
        go_left = column_values(Xc, j, node_rows) <= thr
        return gain, j, thr, go_left
