"""Stratified partitions and training subsets."""

import logging
from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

from ..utils.errors import DegenerateLabelError
from ..utils.seeds import derive_seed

logger = logging.getLogger(__name__)

MAX_PARTITION_ATTEMPTS = 20


def stratified_kfold(classes: Sequence[int], k: int, seed: int) -> np.ndarray:
    """Fold index of every instance; per-class fold counts differ by at most one."""

    classes = np.asarray(classes)
    if k < 2:
        raise ValueError(f"Need at least two folds, got {k}")
    if k > len(classes):
        raise ValueError(f"Cannot split {len(classes)} instances into {k} folds")

    folds = np.empty(len(classes), dtype=np.int64)
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    for fold, (_, test) in enumerate(splitter.split(np.zeros(len(classes)), classes)):
        folds[test] = fold
    return folds


def _training_folds_complete(classes: np.ndarray, folds: np.ndarray, k: int) -> bool:
    present = np.unique(classes)
    for fold in range(k):
        if len(np.unique(classes[folds != fold])) < len(present):
            return False
    return True


def partition(
    classes: Sequence[int],
    k: int,
    master_seed: int,
    repeat: int,
    stream: str = "partition"
) -> Tuple[np.ndarray, int]:
    """Folds for one CV repeat, redrawn while a training fold lacks a class.

    Returns the fold assignment and the partition seed that produced it.
    `stream` names the seed stream, so nested CV loops draw independently.
    """

    classes = np.asarray(classes)
    for attempt in range(MAX_PARTITION_ATTEMPTS):
        seed = derive_seed(master_seed, stream, repeat, attempt)
        folds = stratified_kfold(classes, k, seed)
        if _training_folds_complete(classes, folds, k):
            return folds, seed
        logger.warning(f"{stream} {repeat}: a training fold lacks a class, redrawing (attempt {attempt + 1})")

    raise DegenerateLabelError(
        f"No {stream} into {k} folds keeps every class in every training fold",
        label="class"
    )


def nested_subsets(
    train_idx: Sequence[int],
    classes: Sequence[int],
    fractions: Sequence[float],
    seed: int
) -> Dict[float, np.ndarray]:
    """Stratified training subsets, each contained in the next larger one.

    Every class keeps round(fraction * count) members, at least one; the
    full fraction returns the whole training set.
    """

    train_idx = np.sort(np.asarray(train_idx, dtype=np.int64))
    classes = np.asarray(classes)
    rng = np.random.default_rng(seed)

    orders = {}
    for c in np.unique(classes[train_idx]):
        members = train_idx[classes[train_idx] == c]
        orders[c] = members[rng.permutation(len(members))]

    subsets: Dict[float, np.ndarray] = {}
    for fraction in sorted(fractions):
        chosen = []
        for members in orders.values():
            take = max(1, int(np.floor(fraction * len(members) + 0.5)))
            chosen.append(members[:take])
        subsets[fraction] = np.sort(np.concatenate(chosen))
    return subsets


def balanced_subset(
    train_idx: Sequence[int],
    classes: Sequence[int],
    class_size: int,
    rng: np.random.Generator
) -> np.ndarray:
    """`class_size` members of every class, drawn without replacement."""

    train_idx = np.asarray(train_idx, dtype=np.int64)
    classes = np.asarray(classes)
    chosen = []
    for c in np.unique(classes[train_idx]):
        members = train_idx[classes[train_idx] == c]
        if len(members) < class_size:
            raise ValueError(f"Class {c} has {len(members)} training members, fewer than {class_size}")
        chosen.append(rng.choice(members, size=class_size, replace=False))
    return np.sort(np.concatenate(chosen))
