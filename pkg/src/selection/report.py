"""Composition and recall of a patient selection."""

from dataclasses import dataclass, field
from typing import Any, Dict, Sequence

import numpy as np
import pandas as pd

from ..labeling import ProgressionClass


@dataclass(frozen=True)
class SelectionReport:
    """Per-class count, share of the selection and recall against the class total."""

    counts: Dict[str, int]
    shares: Dict[str, float]
    recalls: Dict[str, float]
    progressive_recall: float
    selected: int
    total: int
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (name, self.counts[name], self.shares[name], self.recalls[name])
            for name in self.counts
        ]
        rows.append(("not N", self.selected - self.counts["N"], np.nan, self.progressive_recall))
        return pd.DataFrame(rows, columns=["class", "count", "share", "recall"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "selected": self.selected,
            "total": self.total,
            "counts": dict(self.counts),
            "shares": dict(self.shares),
            "recalls": dict(self.recalls),
            "progressive_recall": self.progressive_recall,
            **self.extra
        }


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def selection_report(mask: Sequence[bool], true_classes: Sequence[int]) -> SelectionReport:
    """Summarize which true classes a selection picked up.

    An empty selection has all shares and recalls at zero.
    """

    mask = np.asarray(mask, dtype=bool)
    true_classes = np.asarray(true_classes, dtype=np.int64)
    if len(mask) != len(true_classes):
        raise ValueError(f"Mask has {len(mask)} entries but there are {len(true_classes)} labels")

    selected = int(mask.sum())
    totals = np.bincount(true_classes, minlength=len(ProgressionClass))
    picked = np.bincount(true_classes[mask], minlength=len(ProgressionClass))

    counts, shares, recalls = {}, {}, {}
    for cls in ProgressionClass:
        name = cls.display
        counts[name] = int(picked[cls])
        shares[name] = _ratio(int(picked[cls]), selected)
        recalls[name] = _ratio(int(picked[cls]), int(totals[cls]))

    progressive_recall = _ratio(int(picked[1:].sum()), int(totals[1:].sum()))

    return SelectionReport(
        counts=counts,
        shares=shares,
        recalls=recalls,
        progressive_recall=progressive_recall,
        selected=selected,
        total=len(mask)
    )
