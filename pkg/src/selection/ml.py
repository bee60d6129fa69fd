"""Model-based patient selection."""

import logging
from typing import List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def ml_label_select(predicted: Sequence[int]) -> np.ndarray:
    """Every instance predicted progressive (any class but N)."""

    return np.asarray(predicted, dtype=np.int64) != 0


def _descending(scores: np.ndarray, tiebreak: np.ndarray) -> np.ndarray:
    return np.lexsort((tiebreak, -scores))


def quotas(target_count: int, lists: int = 3) -> List[int]:
    """Per-list shares of the target; the remainder goes to the earlier lists."""

    base, extra = divmod(target_count, lists)
    return [base + (1 if i < extra else 0) for i in range(lists)]


def ml_prob_select(
    p_p: Sequence[float],
    p_s: Sequence[float],
    target_count: int,
    ids: Optional[Sequence[str]] = None
) -> np.ndarray:
    """Select exactly `target_count` instances from three probability rankings.

    Instances are sorted by p(P)+p(S), p(S) and p(P), descending, with ties
    going to the smaller instance id. Each ranking contributes its share of
    the target in that order, skipping instances already taken.
    """

    p_p = np.asarray(p_p, dtype=float)
    p_s = np.asarray(p_s, dtype=float)
    n = len(p_p)
    if len(p_s) != n:
        raise ValueError("p(P) and p(S) must have the same length")
    if not 0 <= target_count <= n:
        raise ValueError(f"Cannot select {target_count} of {n} instances")

    if ids is None:
        tiebreak = np.arange(n)
    else:
        # Rank of each id in sorted order; stable for any input ordering
        tiebreak = np.argsort(np.argsort(np.asarray(ids, dtype=str), kind="stable"), kind="stable")

    rankings = [
        _descending(p_p + p_s, tiebreak),
        _descending(p_s, tiebreak),
        _descending(p_p, tiebreak)
    ]

    selected = np.zeros(n, dtype=bool)
    for ranking, quota in zip(rankings, quotas(target_count)):
        taken = 0
        for index in ranking:
            if taken == quota:
                break
            if not selected[index]:
                selected[index] = True
                taken += 1

    logger.debug(f"Probability ranking selected {selected.sum()} of {n} instances")
    return selected
