import numpy as np
import pandas as pd
import pytest

from src.evaluation import (
    CurveSettings,
    CvSettings,
    LabeledDataset,
    ParameterGrid,
    PredictionStore,
    balanced_subset,
    bbc_cv,
    binomial_ci_median,
    classification_report,
    confusion,
    confusion_tensor,
    curve_table,
    f1_from_confusion,
    knn_baseline,
    knn_pair_probabilities,
    learning_curve,
    lower_median_index,
    mad,
    median_run,
    nested_subsets,
    partition,
    pooled_scores,
    repeated_cv,
    roc_curve,
    score_configuration,
    stratified_kfold,
    tune_grid,
    weighted_f1
)
from src.cohort import AttributeKind, AttributeMeta
from src.forest import ForestConfig
from src.strategies import StrategyKind
from src.synth import SynthConfig, generate_cohort
from src.utils.errors import ConfigError, PipelineError
from src.utils.seeds import derive_seed

DESK = CvSettings(repeats=2, folds=3, seeds=2, master_seed=1)
SMALL_FOREST = ForestConfig(n_trees=5)


def _reference_weighted_f1(true, pred, k=4):
    """Independent per-class loop."""

    total = 0.0
    for c in range(k):
        tp = np.sum((true == c) & (pred == c))
        fp = np.sum((true != c) & (pred == c))
        fn = np.sum((true == c) & (pred != c))
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        total += f1 * np.sum(true == c)
    return total / len(true)


class TestMetrics:

    def test_weighted_f1_matches_reference(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 200))
            true = rng.integers(0, 4, size=n)
            pred = rng.integers(0, 4, size=n)
            expected = _reference_weighted_f1(true, pred)

            assert weighted_f1(true, pred) == pytest.approx(expected, abs=1e-12)
            assert f1_from_confusion(confusion(true, pred)) == pytest.approx(expected, abs=1e-12)

    def test_weighted_f1_edge_cases(self):
        assert weighted_f1([0, 1, 2, 3], [0, 1, 2, 3]) == 1.0
        assert weighted_f1([0, 1, 2, 3], [0, 0, 0, 0]) == pytest.approx(0.1)
        with pytest.raises(ValueError):
            weighted_f1([], [])
        with pytest.raises(ValueError):
            weighted_f1([0, 1], [0])

    def test_f1_from_stacked_confusions(self):
        stack = np.stack([confusion([0, 1], [0, 1]), confusion([0, 1], [1, 0]), np.zeros((4, 4))])

        np.testing.assert_allclose(f1_from_confusion(stack), [1.0, 0.0, 0.0])

    def test_binomial_ci(self):
        assert binomial_ci_median(np.arange(1, 11)) == (2.0, 8.0)
        assert binomial_ci_median([0.4]) == (0.4, 0.4)
        with pytest.raises(ValueError):
            binomial_ci_median([])

    def test_mad_and_lower_median(self):
        assert mad([1, 2, 3, 4, 100]) == 1.0
        assert lower_median_index([3, 1, 2, 2]) == 2
        assert lower_median_index([0.5, 0.5]) == 0

    def test_roc(self):
        curve = roc_curve([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])

        assert curve.auc == pytest.approx(0.75)
        assert curve.fpr[0] == 0.0 and curve.tpr[-1] == 1.0
        with pytest.raises(ValueError, match="both positive and negative"):
            roc_curve([0.1, 0.2], [1, 1])

    def test_auc_ignores_monotone_transforms(self, rng):
        truth = rng.integers(0, 2, size=200)
        scores = np.round(rng.random(200) + 0.3 * truth, 2)
        auc = roc_curve(scores, truth).auc

        for transformed in (np.exp(4 * scores), 5 * scores - 2, np.arctan(scores) ** 3, np.log1p(scores)):
            assert roc_curve(transformed, truth).auc == pytest.approx(auc, abs=1e-12)
        assert roc_curve(-scores, truth).auc == pytest.approx(1 - auc, abs=1e-12)

    def test_classification_report(self):
        report = classification_report([0, 0, 1, 3], [0, 1, 1, 3], ["N", "P", "S", "P+S"])

        assert report["accuracy"] == 0.75
        assert report["per_class"]["P"]["precision"] == 0.5
        assert report["per_class"]["S"]["support"] == 0
        assert report["confusion_matrix"][0] == [1, 1, 0, 0]


class TestFolds:

    def test_fold_counts_are_balanced_per_class(self, rng):
        for _ in range(20):
            classes = rng.choice(4, size=int(rng.integers(40, 300)), p=[0.63, 0.12, 0.2, 0.05])
            folds = stratified_kfold(classes, 10, int(rng.integers(0, 2**31)))
            for c in np.unique(classes):
                counts = np.bincount(folds[classes == c], minlength=10)
                assert counts.max() - counts.min() <= 1

    def test_partitions_stay_stratified(self):
        classes = np.random.default_rng(8).permutation(np.repeat([0, 1, 2, 3], [189, 36, 60, 15]))

        for repeat in range(100):
            folds, _ = partition(classes, 10, master_seed=4, repeat=repeat)
            for c in range(4):
                counts = np.bincount(folds[classes == c], minlength=10)
                assert counts.max() - counts.min() <= 1

    def test_fold_count_limits(self):
        with pytest.raises(ValueError):
            stratified_kfold([0, 1], 3, 0)
        with pytest.raises(ValueError):
            stratified_kfold([0, 1, 0, 1], 1, 0)

    def test_partition_is_reproducible(self):
        classes = np.repeat([0, 1, 2, 3], [30, 10, 10, 5])
        folds, seed = partition(classes, 5, master_seed=3, repeat=2)
        again, _ = partition(classes, 5, master_seed=3, repeat=2)

        assert seed == derive_seed(3, "partition", 2, 0)
        np.testing.assert_array_equal(folds, again)
        assert not np.array_equal(folds, partition(classes, 5, master_seed=3, repeat=1)[0])

    def test_nested_subsets(self):
        classes = np.repeat([0, 1, 2, 3], [40, 8, 12, 3])
        train_idx = np.arange(len(classes))
        subsets = nested_subsets(train_idx, classes, [1.0, 0.1, 0.5], seed=5)

        assert list(subsets) == [0.1, 0.5, 1.0]
        assert set(subsets[0.1]) <= set(subsets[0.5]) <= set(subsets[1.0])
        np.testing.assert_array_equal(subsets[1.0], train_idx)
        np.testing.assert_array_equal(np.bincount(classes[subsets[0.1]], minlength=4), [4, 1, 1, 1])

    def test_balanced_subset(self, rng):
        classes = np.repeat([0, 1, 2, 3], [40, 8, 12, 3])
        subset = balanced_subset(np.arange(len(classes)), classes, 3, rng)

        np.testing.assert_array_equal(np.bincount(classes[subset]), [3, 3, 3, 3])
        with pytest.raises(ValueError):
            balanced_subset(np.arange(len(classes)), classes, 4, rng)


class TestStore:

    def test_scores_per_model(self, prediction_frame):
        scores = PredictionStore(prediction_frame).model_scores()

        good = scores[scores["config"] == "good"].set_index(["repeat", "seed"])["score"]
        assert good[(0, 0)] == 1.0
        assert good[(1, 1)] == pytest.approx(2 / 3)
        bad = scores[scores["config"] == "bad"]
        assert bad[bad["seed"] == 0]["score"].tolist() == pytest.approx([0.1, 0.1])

    def test_frame_order_ignores_arrival_order(self, prediction_frame):
        good = prediction_frame[prediction_frame["config"] == "good"]
        bad = prediction_frame[prediction_frame["config"] == "bad"]
        store = PredictionStore()
        store.add(good.iloc[::-1])
        store.add(bad.iloc[8:])
        store.add(bad.iloc[:8])

        assert store.configs == ["good", "bad"]
        pd.testing.assert_frame_equal(store.frame, PredictionStore(prediction_frame).frame)

    def test_coverage(self, prediction_frame):
        store = PredictionStore(prediction_frame)
        store.check_coverage(["i0", "i1", "i2", "i3"])

        with pytest.raises(PipelineError):
            store.check_coverage(["i0", "i1", "i2", "i3", "i4"])
        duplicated = PredictionStore(pd.concat([prediction_frame, prediction_frame.iloc[:1]]))
        with pytest.raises(PipelineError):
            duplicated.check_coverage(["i0", "i1", "i2", "i3"])

    def test_save_and_load(self, prediction_frame, tmp_path):
        store = PredictionStore(prediction_frame)
        path = store.save(tmp_path / "predictions.csv", header="# run: config_hash=abc seed=0 version=1.0.0")
        loaded = PredictionStore.load(path)

        assert path.read_text().startswith("# run: ")
        pd.testing.assert_frame_equal(loaded.frame, store.frame, check_dtype=False)
        assert loaded.truth() == {"i0": 0, "i1": 1, "i2": 2, "i3": 3}

    def test_for_config(self, prediction_frame):
        store = PredictionStore(prediction_frame)

        assert len(store.for_config("good")) == 16
        with pytest.raises(KeyError):
            store.for_config("missing")

    def test_median_run_and_summary(self, prediction_frame):
        store = PredictionStore(prediction_frame)

        # Repeat medians tie, so the first repeat wins; within it the lower median is seed 1
        assert median_run(store, "good") == (0, 1)
        summary = score_configuration(store, "good")
        assert summary.median == pytest.approx(5 / 6)
        assert summary.min_score == pytest.approx(2 / 3)
        assert summary.to_dict()["ci_95"] == pytest.approx([5 / 6, 5 / 6])


class TestKnn:

    def test_nearest_neighbour(self):
        train_X = np.array([[0.0], [0.1], [1.0], [0.9]])
        train_y = np.array([0, 0, 3, 3])

        np.testing.assert_array_equal(knn_baseline(train_X, train_y, np.array([[0.05], [0.95]]), k=1), [0, 3])

    def test_vote_ties_go_to_lowest_class(self):
        train_X = np.array([[0.0], [1.0], [5.0]])
        train_y = np.array([2, 1, 0])
        pred, pair = knn_pair_probabilities(train_X, train_y, np.array([[0.5]]), k=2)

        assert pred[0] == 1
        np.testing.assert_allclose(pair, [[0.5, 0.5]])

    def test_k_larger_than_training_set(self):
        with pytest.raises(ValueError):
            knn_baseline(np.zeros((2, 1)), np.array([0, 1]), np.zeros((1, 1)), k=5)


class TestTuning:

    def test_grid(self):
        grid = ParameterGrid(n_trees=(10, 20), max_depth=(4, None), criterion=("gini",))
        ids = [config_id for config_id, _ in grid.configs(ForestConfig(seed=3))]

        assert len(grid) == 4
        assert ids == ["t10-d4-gini", "t10-dfull-gini", "t20-d4-gini", "t20-dfull-gini"]
        assert len(ParameterGrid()) == 84

    def test_confusion_tensor(self, prediction_frame):
        configs, instances, tensor = confusion_tensor(PredictionStore(prediction_frame))

        assert configs == ["good", "bad"]
        assert instances == ["i0", "i1", "i2", "i3"]
        assert tensor.shape == (2, 4, 4, 4)
        np.testing.assert_array_equal(tensor.sum(axis=(2, 3)), np.full((2, 4), 4.0))
        assert tensor[0, 3, 3, 0] == 2.0

    def test_bbc_prefers_the_better_config(self, prediction_frame):
        store = PredictionStore(prediction_frame)
        result = bbc_cv(store, n_boot=200, seed=4)

        assert result.selections["good"] > result.selections["bad"]
        assert len(result.oob_scores) == 200
        assert 0.0 <= result.ci_low <= result.ci_high <= 1.0
        assert 0.0 <= result.estimate <= 1.0
        assert result == bbc_cv(store, n_boot=200, seed=4)

        pooled = pooled_scores(store)
        assert pooled["good"] > pooled["bad"]


class TestCrossValidation:

    def test_repeated_cv_covers_every_instance(self, dataset):
        store = repeated_cv(dataset, StrategyKind.DUO, SMALL_FOREST, DESK)

        assert len(store) == DESK.repeats * DESK.seeds * dataset.n_instances
        store.check_coverage(dataset.ids)
        assert set(store.frame["fold"]) == {0, 1, 2}
        assert ((store.frame["p_p"] >= 0) & (store.frame["p_p"] <= 1)).all()

        summary = score_configuration(store, "default")
        assert summary.median > 0.4
        assert len(summary.repeat_medians) == DESK.repeats

    def test_workers_do_not_change_predictions(self, dataset):
        serial = repeated_cv(dataset, StrategyKind.MULTILABEL, SMALL_FOREST, DESK, n_jobs=1)
        parallel = repeated_cv(dataset, StrategyKind.MULTILABEL, SMALL_FOREST, DESK, n_jobs=2)

        pd.testing.assert_frame_equal(serial.frame, parallel.frame)

    def test_learning_curve_full_imbalanced(self, dataset):
        curve = CurveSettings(fractions=(0.5, 1.0), mode="full_imbalanced")
        points, store = learning_curve(dataset, StrategyKind.DUO, SMALL_FOREST, DESK, curve)

        assert [p.fraction for p in points] == [0.5, 1.0]
        assert store.configs == ["full_imbalanced:0.5:0", "full_imbalanced:1:0"]
        table = curve_table(points)
        assert list(table.columns) == ["fraction", "median", "mad", "min", "max"]
        assert (table["min"] <= table["median"]).all()

    def test_learning_curve_balanced_knn(self, dataset):
        curve = CurveSettings(fractions=(1.0,), mode="balanced_downsample", n_samples=2, class_size=5, algorithm="knn")
        points, store = learning_curve(dataset, StrategyKind.DUO, SMALL_FOREST, DESK, curve)

        assert len(points[0].sample_medians) == 2
        assert set(store.frame["seed"]) == {0}

    def test_balanced_class_size_is_bounded(self, dataset):
        curve = CurveSettings(fractions=(1.0,), mode="balanced_downsample", n_samples=1, class_size=10_000)

        with pytest.raises(ConfigError):
            learning_curve(dataset, StrategyKind.DUO, SMALL_FOREST, DESK, curve)

    def test_curve_settings_validation(self):
        with pytest.raises(ConfigError):
            CurveSettings(mode="oversample")

    def test_tune_grid(self, dataset):
        grid = ParameterGrid(n_trees=(3,), max_depth=(2, None), criterion=("gini",))
        settings = CvSettings(repeats=1, folds=3, seeds=1, master_seed=2)
        result = tune_grid(dataset, StrategyKind.DUO, grid, ForestConfig(), settings)

        assert result.best_id in {"t3-d2-gini", "t3-dfull-gini"}
        assert [s.config for s in result.summaries] == ["t3-d2-gini", "t3-dfull-gini"]
        assert result.store.configs == ["t3-d2-gini", "t3-dfull-gini"]


def _chance_weighted_f1(matrix):
    """Expected weighted F1 of predictions drawn independently of the truth."""

    total = matrix.sum()
    p = matrix.sum(axis=1) / total
    q = matrix.sum(axis=0) / total
    present = (p + q) > 0
    return float(np.sum(p[present] * 2 * p[present] * q[present] / (p[present] + q[present])))


@pytest.mark.slow
def test_bbc_is_not_optimistic_on_shuffled_labels():
    rng = np.random.default_rng(17)
    n, width = 300, 20
    frame = pd.DataFrame(rng.normal(size=(n, width)), columns=[f"x{j:02d}" for j in range(width)],
                         index=[f"i{i:03d}" for i in range(n)])
    attributes = {name: AttributeMeta(name, AttributeKind.CONTINUOUS) for name in frame.columns}
    labels = np.repeat([0, 1, 2, 3], [189, 36, 60, 15])
    grid = ParameterGrid(n_trees=(3, 5), max_depth=(2, 4, None), criterion=("gini", "entropy"))
    assert len(grid) >= 10

    below, estimates, chances = 0, [], []
    for trial in range(10):
        dataset = LabeledDataset(frame=frame, classes=rng.permutation(labels), attributes=attributes)
        settings = CvSettings(repeats=2, folds=5, seeds=1, master_seed=trial)
        tuning = tune_grid(dataset, StrategyKind.DUO, grid, ForestConfig(), settings, n_jobs=2)
        result = bbc_cv(tuning.store, n_boot=200, seed=trial)

        below += result.estimate < max(pooled_scores(tuning.store).values())
        configs, _, tensor = confusion_tensor(tuning.store)
        chance = {c: _chance_weighted_f1(tensor[i].sum(axis=0)) for i, c in enumerate(configs)}
        estimates.append(result.estimate)
        chances.append(sum(chance[c] * k for c, k in result.selections.items()) / 200)

    assert below >= 8
    assert abs(np.mean(estimates) - np.mean(chances)) < 0.05


@pytest.fixture(scope="module")
def profile_dataset(build_dataset):
    """Imbalanced cohort with the default class fractions, one period per patient."""

    config = SynthConfig(
        n_patients=1000,
        timepoints=(0, 3),
        n_informative_features=20,
        n_noise_features=20,
        missingness=0.05,
        signal_strength=(2.5, 2.5),
        seed=21
    )
    dataset, _, _ = build_dataset(generate_cohort(config, n_jobs=2))
    return dataset


@pytest.mark.slow
def test_cost_sensitive_curve_beats_balanced_downsampling(profile_dataset):
    settings = CvSettings(repeats=3, folds=5, seeds=2, master_seed=6)
    forest = ForestConfig(n_trees=20)

    full, _ = learning_curve(profile_dataset, StrategyKind.DUO, forest, settings,
                             CurveSettings(fractions=(1.0,), mode="full_imbalanced"), n_jobs=2)
    balanced, _ = learning_curve(profile_dataset, StrategyKind.DUO, forest, settings,
                                 CurveSettings(fractions=(1.0,), mode="balanced_downsample", n_samples=11), n_jobs=2)

    assert full[-1].median >= balanced[-1].median
    assert full[-1].mad <= balanced[-1].mad


@pytest.mark.slow
def test_duo_is_not_worse_than_single(profile_dataset):
    forest = ForestConfig(n_trees=25)
    gaps = []
    for master_seed in (1, 2, 3):
        settings = CvSettings(repeats=2, folds=5, seeds=2, master_seed=master_seed)
        duo = repeated_cv(profile_dataset, StrategyKind.DUO, forest, settings, config_id="duo", n_jobs=2)
        single = repeated_cv(profile_dataset, StrategyKind.SINGLE, forest, settings, config_id="single", n_jobs=2)
        gaps.append(score_configuration(duo, "duo").median - score_configuration(single, "single").median)

    assert np.mean(gaps) >= -0.005
