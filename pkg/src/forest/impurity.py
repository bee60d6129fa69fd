"""Split criteria and class weights."""

from typing import Sequence

import numpy as np

from ..utils.errors import DegenerateLabelError

CRITERIA = ("gini", "entropy")


def _impurity_rows(weighted: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of each row of weighted class counts (last axis = classes)."""

    total = weighted.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(total > 0, weighted / total, 0.0)

    if criterion == "gini":
        return 1.0 - np.sum(q * q, axis=-1)
    if criterion == "entropy":
        with np.errstate(invalid="ignore", divide="ignore"):
            terms = np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
        return -np.sum(terms, axis=-1)
    raise ValueError(f"Unknown criterion '{criterion}', expected one of {CRITERIA}")


def node_impurity(counts: Sequence[float], weights: Sequence[float], criterion: str = "gini") -> float:
    """Gini or entropy (bits) of class-weighted counts."""

    weighted = np.asarray(counts, dtype=float) * np.asarray(weights, dtype=float)
    return float(_impurity_rows(weighted, criterion))


def split_impurity(
    counts_left: Sequence,
    counts_right: Sequence,
    weights: Sequence,
    criterion: str = "gini"
) -> float:
    """Impurity decrease of a split, summed over outputs.

    Counts are (classes,) for one output or (outputs, classes) for several;
    child impurities are averaged by weighted child size.
    """

    left = np.atleast_2d(np.asarray(counts_left, dtype=float)) * np.atleast_2d(np.asarray(weights, dtype=float))
    right = np.atleast_2d(np.asarray(counts_right, dtype=float)) * np.atleast_2d(np.asarray(weights, dtype=float))
    parent = left + right

    w_left = left.sum(axis=1)
    w_right = right.sum(axis=1)
    w_parent = parent.sum(axis=1)
    if np.any(w_parent <= 0):
        raise ValueError("Both sides of a split are empty")

    decrease = (
        _impurity_rows(parent, criterion)
        - (w_left / w_parent) * _impurity_rows(left, criterion)
        - (w_right / w_parent) * _impurity_rows(right, criterion)
    )
    return float(decrease.sum())


def class_weights_from_counts(counts: Sequence[int], label: str = "class") -> np.ndarray:
    """Balanced weights w_c = N / (K * n_c)."""

    counts = np.asarray(counts, dtype=float)
    missing = np.flatnonzero(counts <= 0)
    if missing.size:
        raise DegenerateLabelError(
            f"{label} {int(missing[0])} is absent; cannot derive class weights",
            label=f"{label}:{int(missing[0])}"
        )
    return counts.sum() / (len(counts) * counts)


def class_weights(labels: Sequence[int], n_classes: int, label: str = "class") -> np.ndarray:
    """Class weights inversely proportional to the frequency in `labels`."""

    labels = np.asarray(labels, dtype=int)
    return class_weights_from_counts(np.bincount(labels, minlength=n_classes), label=label)
