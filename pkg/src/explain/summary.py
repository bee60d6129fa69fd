"""Feature impact rankings and scatter exports of attributions."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .treeshap import ShapAttribution


@dataclass(frozen=True)
class ImpactSummary:
    output: str
    ranking: pd.DataFrame
    scatter: pd.DataFrame

    @property
    def top_features(self):
        return self.ranking["feature"].tolist()


def summarize_impact(
    attribution: ShapAttribution,
    X: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    instance_ids: Optional[Sequence[str]] = None
) -> ImpactSummary:
    """Rank features by mean |phi| and export the per-instance scatter data.

    Features that never contribute are left out of the ranking. Equal impact
    keeps the feature column order.
    """

    values = np.asarray(attribution.values, dtype=float)
    X = np.asarray(X, dtype=float)
    n, d = values.shape
    names = list(feature_names or attribution.feature_names or [str(j) for j in range(d)])
    ids = list(instance_ids) if instance_ids is not None else list(range(n))

    impact = np.abs(values).mean(axis=0) if n else np.zeros(d)
    order = [j for j in np.lexsort((np.arange(d), -impact)) if impact[j] > 0]

    ranking = pd.DataFrame({
        "rank": np.arange(1, len(order) + 1),
        "feature": [names[j] for j in order],
        "mean_abs_shap": impact[order],
        "mean_shap": values[:, order].mean(axis=0) if n else np.zeros(len(order))
    })

    scatter = pd.DataFrame({
        "feature": np.repeat([names[j] for j in order], n),
        "instance": np.tile(ids, len(order)),
        "value": X[:, order].T.reshape(-1),
        "shap": values[:, order].T.reshape(-1)
    })

    return ImpactSummary(output=attribution.output, ranking=ranking, scatter=scatter)
