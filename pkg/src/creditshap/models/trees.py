"""Regression-tree structure shared by the forest, boosters and TreeSHAP.

Trees are stored as flat node arrays.  Routing rule: x[f] < threshold goes
left; a missing (NaN) value follows the child with the larger training
cover.  Oblivious trees additionally record their per-level (feature,
threshold) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Tree:
    feature: np.ndarray  # int64; -1 marks a leaf
    threshold: np.ndarray  # float64; NaN at leaves
    left: np.ndarray  # int64 child index; -1 at leaves
    right: np.ndarray
    value: np.ndarray  # float64 leaf value; 0 at internal nodes
    cover: np.ndarray  # float64 weighted training sample count
    oblivious: bool = False
    levels: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        internal = self.feature >= 0
        child_sum = self.cover[self.left] + self.cover[self.right]
        mismatch = ~np.isclose(child_sum, self.cover, rtol=1e-9, atol=1e-6)
        bad = internal & (mismatch | (self.left < 0) | (self.right < 0))
        if bad.any():
            raise ValueError("node cover must equal the sum of child covers")
        if self.oblivious:
            depths = _node_depths(self)
            seen: dict[int, tuple[int, float]] = {}
            for i in np.nonzero(internal)[0]:
                pair = (int(self.feature[i]), float(self.threshold[i]))
                d = depths[i]
                if seen.setdefault(d, pair) != pair:
                    raise ValueError("oblivious tree has distinct splits at one level")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def max_depth(self) -> int:
        return int(max(_node_depths(self))) if self.n_nodes > 1 else 0

    def used_features(self) -> list[int]:
        return sorted(set(int(f) for f in self.feature if f >= 0))

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorized routing of every row to its leaf value."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            f = feat[idx]
            t = self.threshold[node[idx]]
            x = X[idx, f]
            lch = self.left[node[idx]]
            rch = self.right[node[idx]]
            go_left = x < t
            nan = np.isnan(x)
            if nan.any():
                bigger_left = self.cover[lch] >= self.cover[rch]
                go_left = np.where(nan, bigger_left, go_left)
            node[idx] = np.where(go_left, lch, rch)
        return self.value[node]

    def expected_value(self) -> float:
        """Cover-weighted mean of leaf values (the tree's SHAP baseline)."""
        leaves = self.feature < 0
        total = self.cover[leaves].sum()
        if total == 0:
            return 0.0
        return float(np.dot(self.value[leaves], self.cover[leaves]) / total)

    def to_dict(self) -> dict:
        d = {
            "oblivious": self.oblivious,
            "feature": self.feature.tolist(),
            "threshold": [None if np.isnan(t) else t for t in self.threshold.tolist()],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
        }
        if self.oblivious:
            d["levels"] = [[f, t] for f, t in self.levels]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(
                [np.nan if t is None else t for t in d["threshold"]], dtype=float
            ),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=float),
            cover=np.asarray(d["cover"], dtype=float),
            oblivious=bool(d.get("oblivious", False)),
            levels=[(int(f), float(t)) for f, t in d.get("levels", [])],
        )


def _node_depths(tree: Tree) -> np.ndarray:
    depths = np.zeros(tree.n_nodes, dtype=int)
    stack = [0]
    while stack:
        i = stack.pop()
        if tree.feature[i] >= 0:
            for c in (tree.left[i], tree.right[i]):
                depths[c] = depths[i] + 1
                stack.append(int(c))
    return depths


class TreeBuilder:
    """Append-only builder producing the flat node arrays."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.cover: list[float] = []

    def add_leaf(self, value: float, cover: float) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.cover.append(float(cover))
        return len(self.feature) - 1

    def add_internal(self, feature: int, threshold: float, cover: float) -> int:
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.cover.append(float(cover))
        return len(self.feature) - 1

    def set_children(self, node: int, left: int, right: int) -> None:
        self.left[node] = left
        self.right[node] = right

    def build(self, oblivious: bool = False, levels=None) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=float),
            cover=np.asarray(self.cover, dtype=float),
            oblivious=oblivious,
            levels=list(levels or []),
        )


def oblivious_tree_from_levels(levels, leaf_values, leaf_covers) -> Tree:
    """Materialize a symmetric tree from per-level splits and 2^depth leaves.

    Leaf index bit b (from the most significant) is 1 when x >= threshold at
    level b.  Internal covers accumulate bottom-up from the leaf covers.
    """
    depth = len(levels)
    n_leaves = 1 << depth
    assert len(leaf_values) == n_leaves and len(leaf_covers) == n_leaves
    builder = TreeBuilder()

    def cover_of(prefix: int, level: int) -> float:
        span = 1 << (depth - level)
        base = prefix * span
        return float(np.sum(leaf_covers[base : base + span]))

    def emit(prefix: int, level: int) -> int:
        if level == depth:
            return builder.add_leaf(leaf_values[prefix], leaf_covers[prefix])
        f, t = levels[level]
        node = builder.add_internal(f, t, cover_of(prefix, level))
        lc = emit(prefix * 2, level + 1)
        rc = emit(prefix * 2 + 1, level + 1)
        builder.set_children(node, lc, rc)
        return node

    emit(0, 0)
    return builder.build(oblivious=True, levels=[(int(f), float(t)) for f, t in levels])
