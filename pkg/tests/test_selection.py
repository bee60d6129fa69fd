import numpy as np
import pandas as pd
import pytest

from src.selection import (
    ConventionalInputs,
    conventional_inputs,
    conventional_select,
    ml_label_select,
    ml_prob_select,
    quotas,
    selection_report,
    unevaluable
)
from src.forest import ForestConfig
from src.strategies import StrategyKind, train_strategy
from src.synth import SynthConfig, generate_cohort
from src.utils.errors import ConfigError

MAPPING = {
    "age": "age",
    "morning_stiffness_minutes": "stiffness_minutes",
    "knee_pain": ["knee_pain_l", "knee_pain_r"],
    "crepitus": ["crepitus_l", "crepitus_r"],
    "osteophytes": ["osteophytes_l", "osteophytes_r"],
    "kl_grade": ["kl_l", "kl_r"],
    "womac_pain": ["womac_pain_l", "womac_pain_r"]
}

nan = np.nan


@pytest.fixture
def criteria_frame():
    rows = {
        # age, stiffness, pain l/r, crepitus l/r, osteophytes l/r, KL l/r, WOMAC l/r
        "old": (60, 40, 1, 0, 0, 0, 0, 0, 2, 2, 45, 10),
        "borderline": (50, 30, 1, 1, 0, 0, 0, 0, 2, 2, 60, 60),
        "right_knee": (45, 10, 1, 1, 0, 0, 0, 0, 4, 3, 60, 40),
        "no_age": (nan, 40, 1, 0, 0, 0, 0, 0, 2, 2, 50, 10),
        "painless": (nan, nan, 0, 0, nan, nan, nan, nan, nan, nan, nan, nan),
        "one_womac": (70, 40, 1, 1, 0, 1, 0, 0, 2, 2, nan, 55)
    }
    columns = [
        "age", "stiffness_minutes", "knee_pain_l", "knee_pain_r", "crepitus_l", "crepitus_r",
        "osteophytes_l", "osteophytes_r", "kl_l", "kl_r", "womac_pain_l", "womac_pain_r"
    ]
    return pd.DataFrame.from_dict(rows, orient="index", columns=columns, dtype=float)


class TestConventional:

    def test_criteria(self, criteria_frame):
        inputs = conventional_inputs(criteria_frame, MAPPING)

        assert inputs.ids == ("old", "borderline", "right_knee", "no_age", "painless", "one_womac")
        np.testing.assert_array_equal(conventional_select(inputs), [True, False, True, False, False, True])
        np.testing.assert_array_equal(unevaluable(inputs), [False, False, False, True, False, False])

    def test_thresholds_are_strict_where_stated(self, criteria_frame):
        frame = criteria_frame.loc[["borderline"]].copy()
        frame["age"] = 50.5

        assert conventional_select(conventional_inputs(frame, MAPPING)).tolist() == [True]
        frame["womac_pain_l"] = frame["womac_pain_r"] = 39.9
        assert conventional_select(conventional_inputs(frame, MAPPING)).tolist() == [False]

    def test_single_column_serves_both_knees(self, criteria_frame):
        mapping = dict(MAPPING, kl_grade="kl_l")
        inputs = conventional_inputs(criteria_frame, mapping)

        np.testing.assert_array_equal(inputs.kl_grade[2], [4.0, 4.0])

    def test_mapping_errors(self, criteria_frame):
        with pytest.raises(ConfigError, match="missing"):
            conventional_inputs(criteria_frame, {k: v for k, v in MAPPING.items() if k != "age"})
        with pytest.raises(ConfigError, match="not in the period frame"):
            conventional_inputs(criteria_frame.drop(columns="kl_r"), MAPPING)
        with pytest.raises(ConfigError):
            conventional_inputs(criteria_frame, dict(MAPPING, crepitus=["crepitus_l"]))

    def test_input_validation(self):
        pair = np.zeros((1, 2))
        with pytest.raises(ValueError, match="KL grades"):
            ConventionalInputs(("a",), np.zeros(1), np.zeros(1), pair, pair, pair, np.full((1, 2), 5.0), pair)
        with pytest.raises(ValueError):
            ConventionalInputs(("a",), np.zeros(2), np.zeros(1), pair, pair, pair, pair, pair)


class TestMlSelection:

    def test_label_selection(self):
        np.testing.assert_array_equal(ml_label_select([0, 1, 2, 3, 0]), [False, True, True, True, False])

    def test_quotas(self):
        assert quotas(10) == [4, 3, 3]
        assert quotas(2) == [1, 1, 0]
        assert quotas(0) == [0, 0, 0]

    def test_rankings_fill_their_quotas(self):
        p_p = [0.9, 0.1, 0.8, 0.2, 0.5, 0.0]
        p_s = [0.8, 0.9, 0.1, 0.7, 0.5, 0.0]

        selected = ml_prob_select(p_p, p_s, 4)
        np.testing.assert_array_equal(selected, [True, True, True, True, False, False])

    def test_ties_go_to_the_smaller_id(self):
        p_p = [0.9, 0.1, 0.8, 0.2, 0.5, 0.0]
        p_s = [0.8, 0.9, 0.1, 0.7, 0.5, 0.0]

        selected = ml_prob_select(p_p, p_s, 4, ids=["f", "e", "d", "c", "b", "a"])
        np.testing.assert_array_equal(selected, [True, True, True, False, True, False])

    def test_count_parity(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 60))
            target = int(rng.integers(0, n + 1))
            selected = ml_prob_select(rng.random(n), rng.random(n), target)
            assert selected.sum() == target

    def test_invalid_requests(self):
        with pytest.raises(ValueError):
            ml_prob_select([0.1, 0.2], [0.1], 1)
        with pytest.raises(ValueError):
            ml_prob_select([0.1, 0.2], [0.1, 0.2], 3)


class TestReport:

    def test_composition_and_recall(self):
        report = selection_report([True, True, False, False, True], [0, 1, 2, 3, 3])

        assert report.counts == {"N": 1, "P": 1, "S": 0, "P+S": 1}
        assert report.shares["N"] == pytest.approx(1 / 3)
        assert report.recalls == {"N": 1.0, "P": 1.0, "S": 0.0, "P+S": 0.5}
        assert report.progressive_recall == 0.5

        frame = report.to_frame()
        assert frame["class"].tolist() == ["N", "P", "S", "P+S", "not N"]
        assert frame.iloc[-1]["count"] == 2
        assert report.to_dict()["selected"] == 3

    def test_empty_selection(self):
        report = selection_report([False, False], [0, 1])

        assert report.selected == 0
        assert set(report.shares.values()) == {0.0}
        assert report.progressive_recall == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            selection_report([True], [0, 1])


@pytest.mark.slow
def test_probability_ranking_admits_fewer_non_progressors(build_dataset):
    config = SynthConfig(n_patients=2000, timepoints=(0, 3), n_informative_features=6, n_noise_features=6,
                         missingness=0.0, signal_strength=(1.0, 1.0), seed=13)
    dataset, frame, _ = build_dataset(generate_cohort(config, n_jobs=2))
    held_out = np.random.default_rng(2).random(dataset.n_instances) < 0.5
    train_idx, test_idx = np.flatnonzero(~held_out), np.flatnonzero(held_out)

    _, X_train, X_test = dataset.encode(train_idx, test_idx)
    model = train_strategy(StrategyKind.DUO, X_train, dataset.classes[train_idx],
                           ForestConfig(n_trees=30, seed=1), dataset.distribution)
    ids = np.asarray(dataset.ids)[test_idx]
    truth = dataset.classes[test_idx]

    conventional = conventional_select(conventional_inputs(frame.loc[ids], MAPPING))
    p_p, p_s = model.predict_duo_probabilities(X_test)
    ml = ml_prob_select(p_p, p_s, int(conventional.sum()), ids=ids)

    assert conventional.sum() > 0
    assert ml.sum() == conventional.sum()
    assert selection_report(ml, truth).shares["N"] < selection_report(conventional, truth).shares["N"]
