"""Weighted least-squares regression trees (greedy top-down CART)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TreeNode:
    """Internal node (feature, threshold) or leaf (value)."""

    feature: int = -1
    threshold: float = 0.0
    value: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class RegressionTree:
    root: TreeNode
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"RegressionTree.predict: expected {self.n_features} features, got {X.shape[1]}")
        out = np.empty(X.shape[0], dtype=np.float64)
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return float(out[0]) if single else out

    def _fill(self, node: TreeNode, X, idx, out) -> None:
        if node.is_leaf:
            out[idx] = node.value
            return
        go_left = X[idx, node.feature] <= node.threshold
        self._fill(node.left, X, idx[go_left], out)
        self._fill(node.right, X, idx[~go_left], out)

    def depth(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def n_leaves(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 1
            return walk(node.left) + walk(node.right)

        return walk(self.root)

    def to_tokens(self) -> list[str]:
        """Preorder serialisation: 'I <feature> <threshold>' / 'L <value>' tokens."""
        tokens: list[str] = []

        def walk(node):
            if node.is_leaf:
                tokens.extend(["L", repr(float(node.value))])
            else:
                tokens.extend(["I", str(int(node.feature)), repr(float(node.threshold))])
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return tokens

    @classmethod
    def from_tokens(cls, tokens: list[str], n_features: int) -> "RegressionTree":
        pos = 0

        def parse() -> TreeNode:
            nonlocal pos
            kind = tokens[pos]
            if kind == "L":
                node = TreeNode(value=float(tokens[pos + 1]))
                pos += 2
                return node
            if kind == "I":
                feature = int(tokens[pos + 1])
                threshold = float(tokens[pos + 2])
                pos += 3
                left = parse()
                right = parse()
                return TreeNode(feature=feature, threshold=threshold, left=left, right=right)
            raise ValueError(f"RegressionTree.from_tokens: bad node kind {kind!r}")

        root = parse()
        if pos != len(tokens):
            raise ValueError("RegressionTree.from_tokens: trailing tokens")
        return cls(root=root, n_features=n_features)


def _weighted_mean(g: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(w * g) / np.sum(w))


def split_tolerance(g, w) -> float:
    """SSE comparison tolerance for tie-breaking, relative to the node's scale.

    Mathematically tied candidates (common when two features isolate the same
    sample) must resolve by the deterministic tie rule, not by accumulated
    rounding, so SSE comparisons treat differences below this as equal.
    """
    scale = float(np.sum(w * g * g))
    return 1e-12 * max(scale, 1e-300)


def _best_split(X, g, w, min_samples_leaf):
    """Smallest total weighted SSE over all (feature, midpoint-threshold) candidates.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values.  Ties (up to :func:`split_tolerance`) break toward the lowest
    feature index, then the lowest threshold.  Returns (sse, feature,
    threshold) or None if no candidate leaves at least ``min_samples_leaf``
    samples on each side.
    """
    n, d = X.shape
    tol = split_tolerance(g, w)
    best = None
    for f in range(d):
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        gs = g[order]
        ws = w[order]
        # split after sorted position i is valid only between distinct values
        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        if min_samples_leaf > 1:
            cut = cut[(cut >= min_samples_leaf - 1) & (cut <= n - 1 - min_samples_leaf)]
        if cut.size == 0:
            continue
        wg = ws * gs
        cw = np.cumsum(ws)
        cwg = np.cumsum(wg)
        cwgg = np.cumsum(wg * gs)
        lw, lwg, lwgg = cw[cut], cwg[cut], cwgg[cut]
        rw, rwg, rwgg = cw[-1] - lw, cwg[-1] - lwg, cwgg[-1] - lwgg
        # rw can cancel to exactly 0 when the right side's weights are absorbed
        # by the cumsum; a side with (numerically) zero total weight has zero
        # weighted SSE.
        rw_safe = np.where(rw > 0, rw, 1.0)
        sse = (lwgg - lwg * lwg / lw) + np.where(rw > 0, rwgg - rwg * rwg / rw_safe, 0.0)
        j = int(np.nonzero(sse <= sse.min() + tol)[0][0])
        if best is None or sse[j] < best[0] - tol:
            best = (float(sse[j]), f, float((xs[cut[j]] + xs[cut[j] + 1]) / 2.0))
    return best


def fit_tree_weighted(
    features: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    max_depth: int,
    min_samples_leaf: int = 1,
) -> RegressionTree:
    """Greedy CART minimising weighted squared error of the targets.

    Leaf values are weighted means of the targets reaching the leaf.  Samples
    with zero weight are excluded entirely (they influence neither splits nor
    leaf values, though the finished tree still routes them at prediction
    time).  Recursion stops at max_depth, at min_samples_leaf, or when the
    node's targets are constant.
    """
    X = np.asarray(features, dtype=np.float64)
    g = np.asarray(targets, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("fit_tree_weighted: features must be 2-D")
    if not (X.shape[0] == g.shape[0] == w.shape[0]):
        raise ValueError("fit_tree_weighted: features, targets, weights lengths disagree")
    if np.any(w < 0):
        raise ValueError("fit_tree_weighted: negative weights")
    if max_depth < 1 or min_samples_leaf < 1:
        raise ValueError("fit_tree_weighted: max_depth and min_samples_leaf must be >= 1")
    active = w > 0
    if not np.any(active):
        raise ValueError("fit_tree_weighted: all weights are zero")
    Xa, ga, wa = X[active], g[active], w[active]

    def build(Xn, gn, wn, depth) -> TreeNode:
        if (
            depth >= max_depth
            or Xn.shape[0] < 2 * min_samples_leaf
            or np.all(gn == gn[0])
        ):
            return TreeNode(value=_weighted_mean(gn, wn))
        found = _best_split(Xn, gn, wn, min_samples_leaf)
        if found is None:
            return TreeNode(value=_weighted_mean(gn, wn))
        _, feature, threshold = found
        go_left = Xn[:, feature] <= threshold
        return TreeNode(
            feature=feature,
            threshold=threshold,
            left=build(Xn[go_left], gn[go_left], wn[go_left], depth + 1),
            right=build(Xn[~go_left], gn[~go_left], wn[~go_left], depth + 1),
        )

    return RegressionTree(root=build(Xa, ga, wa, 0), n_features=X.shape[1])
