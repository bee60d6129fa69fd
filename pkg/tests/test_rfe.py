from dataclasses import replace

import numpy as np
import pytest

from src.evaluation import CvSettings, PredictionStore
from src.evaluation import folds as folds_module
from src.forest import ForestConfig
from src.rfe import RFE_CONFIG_ID, RfeResult, RfeTrace, rfe_select, run_rfe_cv, selection_frequency
from src.strategies import StrategyKind


def _trace(subsets, scores, chosen, names=("a", "b", "c")):
    elimination = [next(iter(set(a) - set(b))) for a, b in zip(subsets, subsets[1:])] + [subsets[-1][0]]
    return RfeTrace(
        subsets=tuple(tuple(s) for s in subsets),
        scores=tuple(scores),
        elimination=tuple(elimination),
        chosen=tuple(chosen),
        feature_names=names
    )


@pytest.fixture
def traces():
    return (
        _trace([(0, 1, 2), (0, 1), (1,)], [0.5, 0.7, 0.7], (1,)),
        _trace([(0, 1, 2), (0, 1), (0,)], [0.5, 0.8, 0.6], (0, 1))
    )


def test_rfe_eliminates_noise_first(separable):
    X, classes = separable
    config = ForestConfig(n_trees=15, seed=2)
    trace = rfe_select(X, classes, StrategyKind.DUO, config, np.bincount(classes), inner_k=3, seed=6,
                       feature_names=[f"f{i}" for i in range(5)])

    assert trace.subset_sizes == [5, 4, 3, 2, 1]
    assert sorted(trace.elimination) == [0, 1, 2, 3, 4]
    assert set(trace.elimination[-2:]) == {0, 1}
    assert {0, 1} <= set(trace.chosen)
    assert trace.chosen_names[:2] == ["f0", "f1"]
    assert list(trace.to_frame().columns) == ["subset_size", "inner_score"]


def test_rfe_is_reproducible(separable):
    X, classes = separable
    config = ForestConfig(n_trees=5, seed=2)
    first = rfe_select(X, classes, StrategyKind.SINGLE, config, np.bincount(classes), seed=1)

    assert first == rfe_select(X, classes, StrategyKind.SINGLE, config, np.bincount(classes), seed=1, n_jobs=2)


def test_rfe_redraws_inner_folds_missing_a_class(separable, monkeypatch):
    X, classes = separable
    real = folds_module.stratified_kfold
    calls = []

    def first_draw_loses_class_3(labels, k, seed):
        folds = real(labels, k, seed)
        if not calls:
            folds[np.asarray(labels) == 3] = 0
        calls.append(seed)
        return folds

    monkeypatch.setattr(folds_module, "stratified_kfold", first_draw_loses_class_3)
    trace = rfe_select(X[:, :3], classes, StrategyKind.ONE_VS_REST, ForestConfig(n_trees=3, seed=2),
                       np.bincount(classes), inner_k=3, seed=4)

    assert len(calls) == 2
    assert calls[0] != calls[1]
    assert trace.subset_sizes == [3, 2, 1]


def test_rfe_keeps_going_with_a_single_member_class(separable):
    X, classes = separable
    classes = classes.copy()
    classes[np.flatnonzero(classes == 3)[1:]] = 2

    trace = rfe_select(X[:, :3], classes, StrategyKind.DUO, ForestConfig(n_trees=3, seed=2),
                       np.bincount(classes, minlength=4), inner_k=3, seed=4)

    assert trace.subset_sizes == [3, 2, 1]


def test_rfe_needs_features():
    with pytest.raises(ValueError):
        rfe_select(np.zeros((4, 0)), [0, 1, 0, 1], StrategyKind.DUO, ForestConfig(), [2, 2, 0, 0])


def test_selection_frequency(traces):
    frame = selection_frequency(traces)

    assert frame["feature"].tolist() == ["b", "a", "c"]
    assert frame["count"].tolist() == [2, 1, 0]
    assert frame["fraction"].tolist() == [1.0, 0.5, 0.0]
    assert (frame["rounds"] == 2).all()


def test_rfe_result_summary(traces):
    result = RfeResult(store=PredictionStore(), traces=traces, frequency=selection_frequency(traces))

    assert result.subset_size_range == (1, 2)
    assert result.summary()["always_selected"] == ["b"]
    table = result.trace_table()
    assert table["round"].tolist() == [0, 0, 0, 1, 1, 1]
    assert table["subset_size"].tolist() == [3, 2, 1, 3, 2, 1]


@pytest.mark.slow
def test_run_rfe_cv(dataset):
    settings = CvSettings(repeats=1, folds=2, seeds=1, master_seed=5)
    result = run_rfe_cv(dataset, StrategyKind.DUO, ForestConfig(n_trees=5), settings, inner_k=2)

    assert result.store.configs == [RFE_CONFIG_ID]
    result.store.check_coverage(dataset.ids)
    assert len(result.traces) == 2
    low, high = result.subset_size_range
    assert 1 <= low <= high
    assert result.frequency["rounds"].iloc[0] == 2


@pytest.mark.slow
def test_test_fold_rows_do_not_steer_elimination(dataset):
    columns = ["age", "kl_l", "inf_000", "inf_001", "noise_000", "noise_001"]
    narrow = replace(dataset, frame=dataset.frame[columns])
    settings = CvSettings(repeats=1, folds=2, seeds=1, master_seed=3)
    folds = settings.partitions(narrow.classes)[0]

    perturbed_frame = narrow.frame.copy()
    test_rows = perturbed_frame.index[folds == 0]
    perturbed_frame.loc[test_rows, columns] = perturbed_frame.loc[test_rows, columns] * -3.0 + 100.0
    perturbed = replace(narrow, frame=perturbed_frame)

    config = ForestConfig(n_trees=3)
    original = run_rfe_cv(narrow, StrategyKind.DUO, config, settings, inner_k=2)
    shifted = run_rfe_cv(perturbed, StrategyKind.DUO, config, settings, inner_k=2)

    assert shifted.traces[0] == original.traces[0]
