"""Shared fixtures: a small synthetic cohort, hand-built trees and toy datasets."""

import numpy as np
import pandas as pd
import pytest

from src.cohort import build_periods, periods_to_frame
from src.evaluation import LabeledDataset
from src.forest import DecisionTree
from src.labeling import label_periods
from src.preprocess import PreprocessPlan, fill_forward, filter_table
from src.synth import SynthConfig, generate_cohort


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synth_config():
    return SynthConfig(
        n_patients=80,
        timepoints=(0, 2, 5, 8),
        n_informative_features=4,
        n_noise_features=4,
        missingness=0.0,
        signal_strength=(2.0, 2.0),
        seed=3
    )


@pytest.fixture(scope="session")
def synthetic(synth_config):
    return generate_cohort(synth_config)


@pytest.fixture(scope="session")
def labeled(synthetic):
    """(periods, labels, unfiltered labeled frame) of the synthetic cohort."""

    table = fill_forward(synthetic.table)
    periods = build_periods(table, synthetic.replacements)
    labels, _ = label_periods(periods)
    frame = periods_to_frame([p for p in periods if p.period_id in labels], list(table.attributes))
    return periods, labels, frame


@pytest.fixture(scope="session")
def dataset(synthetic, labeled):
    _, labels, frame = labeled
    plan = PreprocessPlan()
    filtered, _ = filter_table(frame, synthetic.table.attributes, plan)
    classes = np.array([int(labels[i]) for i in filtered.index], dtype=np.int64)
    return LabeledDataset(frame=filtered, classes=classes, attributes=synthetic.table.attributes, plan=plan)


@pytest.fixture(scope="session")
def build_dataset():
    """Label a synthetic cohort and return (dataset, unfiltered labeled frame, labels)."""

    def build(cohort):
        table = fill_forward(cohort.table)
        periods = build_periods(table, cohort.replacements)
        labels, _ = label_periods(periods)
        frame = periods_to_frame([p for p in periods if p.period_id in labels], list(table.attributes))
        plan = PreprocessPlan()
        filtered, _ = filter_table(frame, cohort.table.attributes, plan)
        classes = np.array([int(labels[i]) for i in filtered.index], dtype=np.int64)
        dataset = LabeledDataset(frame=filtered, classes=classes, attributes=cohort.table.attributes, plan=plan)
        return dataset, frame, labels

    return build


@pytest.fixture
def stump():
    """x0 <= 0.5 splits 100 rows 50/50 into a class-0 and a class-1 leaf."""

    return DecisionTree.from_arrays(
        children_left=[1, -1, -1],
        children_right=[2, -1, -1],
        feature=[0, -1, -1],
        threshold=[0.5, 0.0, 0.0],
        value=[[50.0, 50.0], [50.0, 0.0], [0.0, 50.0]]
    )


@pytest.fixture
def separable():
    """Four classes determined by the signs of the first two features."""

    rng = np.random.default_rng(7)
    X = rng.normal(size=(160, 5))
    classes = (X[:, 0] > 0).astype(np.int64) + 2 * (X[:, 1] > 0).astype(np.int64)
    return X, classes


@pytest.fixture
def prediction_frame():
    """Hand-made store rows: two configs, two repeats, two seeds, four instances."""

    rows = []
    truth = [0, 1, 2, 3]
    preds = {
        ("good", 0): [0, 1, 2, 3],
        ("good", 1): [0, 1, 2, 0],
        ("bad", 0): [0, 0, 0, 0],
        ("bad", 1): [1, 1, 2, 0]
    }
    for (config, seed), pred in preds.items():
        for repeat in (0, 1):
            for i, (t, p) in enumerate(zip(truth, pred)):
                rows.append({
                    "config": config,
                    "repeat": repeat,
                    "seed": seed,
                    "fold": i % 2,
                    "instance": f"i{i}",
                    "true": t,
                    "pred": p,
                    "p_p": float(p in (1, 3)),
                    "p_s": float(p in (2, 3))
                })
    return pd.DataFrame(rows)
