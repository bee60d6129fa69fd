"""CART decision trees stored as flat node arrays."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ModelFormatError
from .impurity import _impurity_rows

logger = logging.getLogger(__name__)

LEAF = -1

# Splits must decrease impurity by more than this
MIN_DECREASE = 1e-12


@dataclass(frozen=True)
class DecisionTree:
    """Binary tree over numeric features.

    Node 0 is the root. A node is a leaf when `children_left` is -1.
    Rows with feature value <= threshold go left. `value` holds the
    class-weighted counts of every node, shape (nodes, outputs, max classes);
    `cover` holds the number of training rows (with bootstrap multiplicity).
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    improvement: np.ndarray
    n_classes: Tuple[int, ...]

    @classmethod
    def from_arrays(
        cls,
        children_left: Sequence[int],
        children_right: Sequence[int],
        feature: Sequence[int],
        threshold: Sequence[float],
        value: Any,
        cover: Optional[Sequence[float]] = None,
        improvement: Optional[Sequence[float]] = None,
        n_classes: Optional[Sequence[int]] = None
    ) -> "DecisionTree":
        """Build a tree from explicit node arrays.

        `value` may be (nodes, classes) for a single output. Cover defaults
        to the summed node counts.
        """

        value = np.asarray(value, dtype=float)
        if value.ndim == 2:
            value = value[:, None, :]
        n_nodes = value.shape[0]

        if cover is None:
            cover = value[:, 0, :].sum(axis=1)
        if improvement is None:
            improvement = np.zeros(n_nodes)
        if n_classes is None:
            n_classes = (value.shape[2],) * value.shape[1]

        tree = cls(
            children_left=np.asarray(children_left, dtype=np.int64),
            children_right=np.asarray(children_right, dtype=np.int64),
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=float),
            value=value,
            cover=np.asarray(cover, dtype=float),
            improvement=np.asarray(improvement, dtype=float),
            n_classes=tuple(int(k) for k in n_classes)
        )
        tree.validate()
        return tree

    def validate(self):
        n_nodes = self.value.shape[0]
        for name in ("children_left", "children_right", "feature", "threshold", "cover", "improvement"):
            if len(getattr(self, name)) != n_nodes:
                raise ModelFormatError(f"Tree array '{name}' has {len(getattr(self, name))} entries, expected {n_nodes}")
        internal = self.children_left != LEAF
        if np.any((self.children_right != LEAF) != internal):
            raise ModelFormatError("Every internal node needs two children")
        children = np.concatenate([self.children_left[internal], self.children_right[internal]])
        if np.any(children <= 0) or np.any(children >= n_nodes):
            raise ModelFormatError("Child index out of range")
        if np.any(self.value < 0):
            raise ModelFormatError("Node class counts must be non-negative")

    @property
    def n_nodes(self) -> int:
        return int(self.value.shape[0])

    @property
    def n_outputs(self) -> int:
        return len(self.n_classes)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.children_left == LEAF

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if not self.is_leaf[node]:
                depths[self.children_left[node]] = depths[node] + 1
                depths[self.children_right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""

        X = np.asarray(X, dtype=float)
        nodes = np.zeros(len(X), dtype=np.int64)
        active = ~self.is_leaf[nodes]
        rows = np.arange(len(X))

        while active.any():
            current = nodes[active]
            goes_left = X[rows[active], self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(goes_left, self.children_left[current], self.children_right[current])
            active = ~self.is_leaf[nodes]

        return nodes

    def node_proba(self) -> np.ndarray:
        """Per-node class proportions, normalized per output."""

        totals = self.value.sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, self.value / totals, 0.0)

    def predict_proba(self, X: np.ndarray) -> List[np.ndarray]:
        leaves = self.apply(X)
        proba = self.node_proba()[leaves]
        return [proba[:, o, :k] for o, k in enumerate(self.n_classes)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "children_left": self.children_left.tolist(),
            "children_right": self.children_right.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
            "improvement": self.improvement.tolist(),
            "n_classes": list(self.n_classes)
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DecisionTree":
        try:
            return cls.from_arrays(
                children_left=data["children_left"],
                children_right=data["children_right"],
                feature=data["feature"],
                threshold=data["threshold"],
                value=np.asarray(data["value"], dtype=float),
                cover=data["cover"],
                improvement=data["improvement"],
                n_classes=data["n_classes"]
            )
        except KeyError as e:
            raise ModelFormatError(f"Tree record is missing {e}") from e


class TreeBuilder:
    """Greedy depth-first CART growth with random feature subsets.

    Node sizes checked against `min_samples_split` count bootstrap
    multiplicity, not distinct rows.
    """

    def __init__(
        self,
        n_classes: Sequence[int],
        class_weights: Sequence[np.ndarray],
        criterion: str = "gini",
        max_depth: Optional[int] = None,
        min_samples_split: int = 2,
        max_features: Optional[int] = None
    ):
        self.n_classes = tuple(int(k) for k in n_classes)
        self.n_outputs = len(self.n_classes)
        self.max_classes = max(self.n_classes)
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features

        # (outputs, max classes) with zero padding for narrower outputs
        self.weights = np.zeros((self.n_outputs, self.max_classes))
        for o, w in enumerate(class_weights):
            self.weights[o, :len(w)] = w

    def _contributions(self, Y: np.ndarray, multiplicity: np.ndarray) -> np.ndarray:
        """Per-row weighted one-hot targets, shape (rows, outputs, max classes)."""

        n = len(Y)
        contrib = np.zeros((n, self.n_outputs, self.max_classes))
        for o in range(self.n_outputs):
            contrib[np.arange(n), o, Y[:, o]] = multiplicity * self.weights[o, Y[:, o]]
        return contrib

    def _best_split(
        self,
        X: np.ndarray,
        contrib: np.ndarray,
        idx: np.ndarray,
        rng: np.random.Generator
    ) -> Optional[Tuple[int, float, float, float]]:
        node_contrib = contrib[idx]
        parent = node_contrib.sum(axis=0)
        w_parent = parent.sum(axis=1)
        parent_impurity = _impurity_rows(parent, self.criterion)

        n_features = X.shape[1]
        budget = self.max_features or n_features
        best: Optional[Tuple[float, int, float, float]] = None
        evaluated = 0

        for f in rng.permutation(n_features):
            if evaluated >= budget:
                break

            values = X[idx, f]
            order = np.argsort(values, kind="mergesort")
            sorted_values = values[order]
            distinct = sorted_values[1:] > sorted_values[:-1]
            if not distinct.any():
                continue
            evaluated += 1

            left = np.cumsum(node_contrib[order], axis=0)[:-1]
            right = parent[None] - left
            w_left = left.sum(axis=2)
            w_right = right.sum(axis=2)

            decrease_per_output = (
                parent_impurity[None]
                - (w_left / w_parent[None]) * _impurity_rows(left, self.criterion)
                - (w_right / w_parent[None]) * _impurity_rows(right, self.criterion)
            )
            decrease = np.where(distinct, decrease_per_output.sum(axis=1), -np.inf)

            position = int(np.argmax(decrease))
            candidate = float(decrease[position])
            threshold = (sorted_values[position] + sorted_values[position + 1]) / 2.0
            if threshold >= sorted_values[position + 1]:
                threshold = float(sorted_values[position])
            improvement = float(np.sum(w_parent * decrease_per_output[position]))

            key = (candidate, int(f), float(threshold))
            if best is None or candidate > best[0] or (
                candidate == best[0] and (key[1], key[2]) < (best[1], best[2])
            ):
                best = (candidate, int(f), float(threshold), improvement)

        if best is None or best[0] <= MIN_DECREASE:
            return None

        decrease, feature, threshold, improvement = best
        return feature, threshold, decrease, improvement

    def build(
        self,
        X: np.ndarray,
        Y: np.ndarray,
        rng: np.random.Generator,
        multiplicity: Optional[np.ndarray] = None
    ) -> DecisionTree:
        """Grow a tree on the rows with non-zero multiplicity."""

        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=np.int64)
        if Y.ndim == 1:
            Y = Y[:, None]
        if len(X) == 0:
            raise ValueError("Cannot grow a tree on zero rows")

        if multiplicity is None:
            multiplicity = np.ones(len(X))
        multiplicity = np.asarray(multiplicity, dtype=float)

        contrib = self._contributions(Y, multiplicity)

        children_left: List[int] = []
        children_right: List[int] = []
        features: List[int] = []
        thresholds: List[float] = []
        values: List[np.ndarray] = []
        covers: List[float] = []
        improvements: List[float] = []

        def add_node(idx: np.ndarray) -> int:
            children_left.append(LEAF)
            children_right.append(LEAF)
            features.append(LEAF)
            thresholds.append(0.0)
            values.append(contrib[idx].sum(axis=0))
            covers.append(float(multiplicity[idx].sum()))
            improvements.append(0.0)
            return len(values) - 1

        root_idx = np.flatnonzero(multiplicity > 0)
        stack = [(add_node(root_idx), root_idx, 0)]

        while stack:
            node, idx, depth = stack.pop()

            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if covers[node] < self.min_samples_split:
                continue
            if np.all(np.count_nonzero(values[node], axis=1) <= 1):
                continue

            split = self._best_split(X, contrib, idx, rng)
            if split is None:
                continue

            feature, threshold, _, improvement = split
            goes_left = X[idx, feature] <= threshold
            left = add_node(idx[goes_left])
            right = add_node(idx[~goes_left])

            children_left[node] = left
            children_right[node] = right
            features[node] = feature
            thresholds[node] = threshold
            improvements[node] = improvement

            stack.append((right, idx[~goes_left], depth + 1))
            stack.append((left, idx[goes_left], depth + 1))

        return DecisionTree(
            children_left=np.asarray(children_left, dtype=np.int64),
            children_right=np.asarray(children_right, dtype=np.int64),
            feature=np.asarray(features, dtype=np.int64),
            threshold=np.asarray(thresholds, dtype=float),
            value=np.asarray(values, dtype=float),
            cover=np.asarray(covers, dtype=float),
            improvement=np.asarray(improvements, dtype=float),
            n_classes=self.n_classes
        )
