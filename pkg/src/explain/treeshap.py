"""Path-dependent TreeSHAP attributions for forest outputs."""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..forest import DecisionTree, RandomForestModel
from ..strategies import DuoModel, MultiLabelModel, OneVsRestModel, SingleModel, StrategyModel
from ..utils.errors import ModelFormatError

logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_FEATURES = 20


@dataclass(frozen=True)
class ShapAttribution:
    """Per-instance contributions of every feature to one model output.

    `values` is (instances, features); `base_value + values.sum(axis=1)`
    reproduces the explained output of each instance.
    """

    values: np.ndarray
    base_value: float
    output: str
    feature_names: Tuple[str, ...] = ()

    def predictions(self) -> np.ndarray:
        return self.base_value + self.values.sum(axis=1)


def node_values(tree: DecisionTree, output: int = 0, class_weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """Explained scalar per node: a linear combination of class probabilities.

    The default explains the probability of class 1.
    """

    proba = tree.node_proba()[:, output, :tree.n_classes[output]]
    if class_weights is None:
        class_weights = np.eye(tree.n_classes[output])[1]
    return proba @ np.asarray(class_weights, dtype=float)


def _check_cover(tree: DecisionTree):
    if np.any(tree.cover <= 0):
        raise ModelFormatError("Tree has a node with zero cover; path-dependent expectations are undefined")


# Path elements are [feature, zero_fraction, one_fraction, weight]; the root
# element carries feature -1 and is never attributed.

def _extend(path: List[List[float]], zero: float, one: float, feature: int):
    depth = len(path)
    path.append([feature, zero, one, 1.0 if depth == 0 else 0.0])
    for i in range(depth - 1, -1, -1):
        path[i + 1][3] += one * path[i][3] * (i + 1) / (depth + 1)
        path[i][3] = zero * path[i][3] * (depth - i) / (depth + 1)


def _unwind(path: List[List[float]], index: int):
    depth = len(path) - 1
    zero, one = path[index][1], path[index][2]
    next_one = path[depth][3]

    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = path[i][3]
            path[i][3] = next_one * (depth + 1) / ((i + 1) * one)
            next_one = tmp - path[i][3] * zero * (depth - i) / (depth + 1)
        else:
            path[i][3] = path[i][3] * (depth + 1) / (zero * (depth - i))

    for i in range(index, depth):
        path[i][0], path[i][1], path[i][2] = path[i + 1][0], path[i + 1][1], path[i + 1][2]
    path.pop()


def _unwound_sum(path: List[List[float]], index: int) -> float:
    depth = len(path) - 1
    zero, one = path[index][1], path[index][2]
    next_one = path[depth][3]
    total = 0.0

    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = next_one * (depth + 1) / ((i + 1) * one)
            total += tmp
            next_one = path[i][3] - tmp * zero * (depth - i) / (depth + 1)
        elif zero != 0:
            total += (path[i][3] / zero) / ((depth - i) / (depth + 1))
    return total


def _recurse(
    tree: DecisionTree,
    x: np.ndarray,
    values: np.ndarray,
    phi: np.ndarray,
    node: int,
    parent_path: List[List[float]],
    zero: float,
    one: float,
    feature: int
):
    path = [list(element) for element in parent_path]
    _extend(path, zero, one, feature)

    if tree.children_left[node] < 0:
        for i in range(1, len(path)):
            weight = _unwound_sum(path, i)
            f, z, o, _ = path[i]
            phi[int(f)] += weight * (o - z) * values[node]
        return

    split = int(tree.feature[node])
    left, right = int(tree.children_left[node]), int(tree.children_right[node])
    hot, cold = (left, right) if x[split] <= tree.threshold[node] else (right, left)

    incoming_zero, incoming_one = 1.0, 1.0
    for k in range(len(path)):
        if int(path[k][0]) == split:
            incoming_zero, incoming_one = path[k][1], path[k][2]
            _unwind(path, k)
            break

    cover = tree.cover[node]
    _recurse(tree, x, values, phi, hot, path, incoming_zero * tree.cover[hot] / cover, incoming_one, split)
    _recurse(tree, x, values, phi, cold, path, incoming_zero * tree.cover[cold] / cover, 0.0, split)


def conditional_expectation(tree: DecisionTree, values: np.ndarray, known: FrozenSet[int], x: np.ndarray) -> float:
    """Expected output when only the features in `known` are observed.

    Unknown splits average both children weighted by their cover.
    """

    def descend(node: int) -> float:
        if tree.children_left[node] < 0:
            return float(values[node])
        left, right = int(tree.children_left[node]), int(tree.children_right[node])
        if int(tree.feature[node]) in known:
            return descend(left if x[tree.feature[node]] <= tree.threshold[node] else right)
        lw, rw = tree.cover[left], tree.cover[right]
        return (descend(left) * lw + descend(right) * rw) / (lw + rw)

    return descend(0)


def expected_value(tree: DecisionTree, values: np.ndarray) -> float:
    """Cover-weighted mean output of the tree."""

    return conditional_expectation(tree, values, frozenset(), np.zeros(0))


def tree_shap(tree: DecisionTree, x: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact Shapley values of one tree output for one instance."""

    _check_cover(tree)
    x = np.asarray(x, dtype=float)
    values = node_values(tree) if values is None else values
    phi = np.zeros(len(x))
    _recurse(tree, x, values, phi, 0, [], 1.0, 1.0, -1)
    return phi


def brute_force_shapley(tree: DecisionTree, x: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
    """Shapley values by enumerating every subset of the features the tree uses."""

    _check_cover(tree)
    x = np.asarray(x, dtype=float)
    values = node_values(tree) if values is None else values

    used = sorted(set(int(f) for f in tree.feature[~tree.is_leaf]))
    m = len(used)
    if m > MAX_BRUTE_FORCE_FEATURES:
        raise ValueError(f"Tree uses {m} features; brute-force enumeration is limited to {MAX_BRUTE_FORCE_FEATURES}")

    cache: Dict[FrozenSet[int], float] = {}

    def v(subset: FrozenSet[int]) -> float:
        if subset not in cache:
            cache[subset] = conditional_expectation(tree, values, subset, x)
        return cache[subset]

    phi = np.zeros(len(x))
    for j in used:
        others = [f for f in used if f != j]
        for size in range(m):
            weight = math.factorial(size) * math.factorial(m - size - 1) / math.factorial(m)
            for subset in itertools.combinations(others, size):
                known = frozenset(subset)
                phi[j] += weight * (v(known | {j}) - v(known))
    return phi


def _explain_trees(
    trees: Sequence[DecisionTree],
    X: np.ndarray,
    output: int,
    class_weights: Optional[Sequence[float]]
) -> Tuple[np.ndarray, float]:
    phi = np.zeros(X.shape)
    base = 0.0
    for tree in trees:
        values = node_values(tree, output, class_weights)
        base += expected_value(tree, values)
        for row in range(len(X)):
            phi[row] += tree_shap(tree, X[row], values)
    return phi, base


def forest_shap(
    model: RandomForestModel,
    X: np.ndarray,
    output: int = 0,
    class_weights: Optional[Sequence[float]] = None,
    label: str = "class 1",
    feature_names: Optional[Sequence[str]] = None,
    n_jobs: int = 1
) -> ShapAttribution:
    """Mean of the per-tree attributions of one forest output."""

    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"Row width {X.shape[1]} does not match the model's {model.n_features} features")

    trees = list(model.trees)
    if n_jobs == 1:
        parts = [_explain_trees(trees, X, output, class_weights)]
    else:
        chunks = [trees[i::n_jobs] for i in range(n_jobs) if trees[i::n_jobs]]
        parts = Parallel(n_jobs=n_jobs)(delayed(_explain_trees)(c, X, output, class_weights) for c in chunks)

    phi = sum(p[0] for p in parts) / len(trees)
    base = sum(p[1] for p in parts) / len(trees)

    return ShapAttribution(values=phi, base_value=float(base), output=label, feature_names=tuple(feature_names or ()))


# Class-probability weights giving p(P) = q_P + q_PS and p(S) = q_S + q_PS
_MARGINALS = {"P": (0.0, 1.0, 0.0, 1.0), "S": (0.0, 0.0, 1.0, 1.0)}


def explain_duo(
    duo: DuoModel,
    X: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    n_jobs: int = 1
) -> Dict[str, ShapAttribution]:
    """Attributions of p(P) and p(S) from the two sub-predictors."""

    return {
        "P": forest_shap(duo.p_forest, X, label="P", feature_names=feature_names, n_jobs=n_jobs),
        "S": forest_shap(duo.s_forest, X, label="S", feature_names=feature_names, n_jobs=n_jobs)
    }


def explain_strategy(
    model: StrategyModel,
    X: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    n_jobs: int = 1
) -> Dict[str, ShapAttribution]:
    """Attributions for the probability outputs of any strategy.

    One-vs-rest models are explained per class forest, since their
    normalized probabilities are not linear in the tree outputs.
    """

    if isinstance(model, DuoModel):
        return explain_duo(model, X, feature_names, n_jobs)

    if isinstance(model, MultiLabelModel):
        forest = model.forests[0]
        return {
            "P": forest_shap(forest, X, output=0, label="P", feature_names=feature_names, n_jobs=n_jobs),
            "S": forest_shap(forest, X, output=1, label="S", feature_names=feature_names, n_jobs=n_jobs)
        }

    if isinstance(model, SingleModel):
        return {
            label: forest_shap(model.forest, X, class_weights=weights, label=label, feature_names=feature_names, n_jobs=n_jobs)
            for label, weights in _MARGINALS.items()
        }

    if isinstance(model, OneVsRestModel):
        labels = ("N", "P", "S", "P+S")
        return {
            label: forest_shap(forest, X, label=label, feature_names=feature_names, n_jobs=n_jobs)
            for label, forest in zip(labels, model.forests)
        }

    raise TypeError(f"Cannot explain {type(model).__name__}")


def explained_outputs(model: StrategyModel, X: np.ndarray) -> Dict[str, np.ndarray]:
    """The model outputs `explain_strategy` attributes, keyed the same way."""

    if isinstance(model, OneVsRestModel):
        positive = model.positive_probabilities(X)
        return {label: positive[:, c] for c, label in enumerate(("N", "P", "S", "P+S"))}

    pair = model.predict_pair_probabilities(X)
    return {"P": pair[:, 0], "S": pair[:, 1]}


def local_accuracy_error(attributions: Dict[str, ShapAttribution], outputs: Dict[str, np.ndarray]) -> float:
    """Largest |base + sum(phi) - output| over all instances and outputs."""

    errors = [np.max(np.abs(a.predictions() - outputs[label]), initial=0.0) for label, a in attributions.items()]
    return float(max(errors, default=0.0))
