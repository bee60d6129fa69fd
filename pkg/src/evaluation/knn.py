"""k-nearest-neighbour baseline."""

from typing import Tuple

import numpy as np
from sklearn.neighbors import KNeighborsClassifier

N_CLASSES = 4


def _fit(train_X: np.ndarray, train_y: np.ndarray, k: int) -> KNeighborsClassifier:
    if len(train_X) < k:
        raise ValueError(f"k={k} exceeds the {len(train_X)} training rows")
    return KNeighborsClassifier(n_neighbors=k, algorithm="kd_tree").fit(train_X, train_y)


def _class_proportions(model: KNeighborsClassifier, test_X: np.ndarray) -> np.ndarray:
    proba = model.predict_proba(test_X)
    full = np.zeros((len(test_X), N_CLASSES))
    full[:, model.classes_.astype(np.int64)] = proba
    return full


def knn_baseline(train_X: np.ndarray, train_y: np.ndarray, test_X: np.ndarray, k: int = 5) -> np.ndarray:
    """Majority vote of the k Euclidean-nearest training rows.

    Inputs are expected min-max scaled; vote ties go to the lowest class.
    """

    proportions = _class_proportions(_fit(train_X, train_y, k), test_X)
    return np.argmax(proportions, axis=1)


def knn_pair_probabilities(
    train_X: np.ndarray,
    train_y: np.ndarray,
    test_X: np.ndarray,
    k: int = 5
) -> Tuple[np.ndarray, np.ndarray]:
    """kNN predictions plus neighbour-share p(P), p(S)."""

    q = _class_proportions(_fit(train_X, train_y, k), test_X)
    pair = np.column_stack([q[:, 1] + q[:, 3], q[:, 2] + q[:, 3]])
    return np.argmax(q, axis=1), pair
