import numpy as np
import pandas as pd
import pytest

from src.cohort import build_periods, load_cohort, load_replacements
from src.evaluation import roc_curve
from src.forest import ForestConfig
from src.labeling import ProgressionClass, class_distribution, label_periods
from src.preprocess import fill_forward
from src.strategies import StrategyKind, bit_targets, train_strategy
from src.synth import OUTCOME_COLUMNS, SynthConfig, class_quotas, generate_cohort, write_synthetic
from src.utils.errors import ConfigError


def test_class_quotas():
    np.testing.assert_array_equal(class_quotas(80, (0.63, 0.12, 0.20, 0.05)), [50, 10, 16, 4])
    np.testing.assert_array_equal(class_quotas(1000, (0.63, 0.12, 0.20, 0.05)), [630, 120, 200, 50])
    assert class_quotas(7, (0.25, 0.25, 0.25, 0.25)).sum() == 7


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(class_fractions=(0.5, 0.5, 0.5, 0.5))
    with pytest.raises(ConfigError):
        SynthConfig(timepoints=(0, 1))
    with pytest.raises(ConfigError):
        SynthConfig(timepoints=(0, 5, 20))
    with pytest.raises(ConfigError):
        SynthConfig(missingness=1.5)


def test_from_config():
    section = {
        "n_patients": 12,
        "timepoints": [0, 3],
        "n_informative_features": 2,
        "n_noise_features": 1,
        "class_fractions": [0.25, 0.25, 0.25, 0.25],
        "missingness": 0.0,
        "signal_strength": [1, 2]
    }
    config = SynthConfig.from_config(section, seed=4)

    assert config.timepoints == (0, 3)
    assert config.signal_strength == (1.0, 2.0)
    assert config.seed == 4
    assert config.improver_fraction == 0.0


def test_cohort_layout(synthetic, synth_config):
    table = synthetic.table

    assert len(table.patients) == synth_config.n_patients
    assert table.timepoints == list(synth_config.timepoints)
    assert table.outcomes == OUTCOME_COLUMNS
    assert table.attributes["barcode"].excluded
    assert table.attributes["comorbidity"].fill_forward
    assert all(table.attributes[c].excluded for c in OUTCOME_COLUMNS.values())
    assert "inf_003" in table.feature_attributes and "noise_003" in table.feature_attributes
    assert list(synthetic.trajectories.columns) == list(OUTCOME_COLUMNS.values())
    assert synthetic.truth["class"].value_counts().to_dict() == {"N": 50, "S": 16, "P": 10, "P+S": 4}


def test_generation_is_reproducible(synth_config):
    first = generate_cohort(synth_config)
    again = generate_cohort(synth_config, n_jobs=2)

    pd.testing.assert_frame_equal(first.table.frame, again.table.frame)
    pd.testing.assert_frame_equal(first.truth, again.truth)


def test_missingness_spares_outcomes():
    cohort = generate_cohort(SynthConfig(n_patients=40, n_informative_features=3, n_noise_features=3, missingness=0.3, seed=2))
    frame = cohort.table.frame

    assert frame[list(OUTCOME_COLUMNS.values())].notna().all().all()
    assert frame["inf_000"].isna().any()
    assert frame["barcode"].notna().all()


def test_replacements_end_histories():
    config = SynthConfig(n_patients=60, n_informative_features=2, n_noise_features=2, replacement_rate=0.5, seed=9)
    cohort = generate_cohort(config)

    assert cohort.replacements
    periods = build_periods(fill_forward(cohort.table), cohort.replacements)
    for period in periods:
        if period.patient in cohort.replacements:
            assert period.end_tp < cohort.replacements[period.patient]


def test_improvers_start_with_high_pain():
    config = SynthConfig(n_patients=200, n_informative_features=1, n_noise_features=1, missingness=0.0,
                         improver_fraction=1.0, seed=5)
    cohort = generate_cohort(config)
    improvers = cohort.truth.index[cohort.truth["pain_family"] == "improver"]
    start = cohort.table.frame.xs(0, level="timepoint").loc[improvers, ["womac_pain_l", "womac_pain_r"]].max(axis=1)

    assert len(improvers) == (cohort.truth["p"] == 0).sum()
    assert (start >= 40).all()

    table = fill_forward(cohort.table)
    labels, _ = label_periods(build_periods(table))
    for period_id, cls in labels.items():
        assert cls.display == cohort.truth.loc[period_id.split(":")[0], "class"]


def test_written_files_load_back(tmp_path):
    config = SynthConfig(n_patients=20, n_informative_features=2, n_noise_features=2, replacement_rate=0.3, seed=1)
    paths = write_synthetic(tmp_path, config, paths={"truth": tmp_path / "sidecar" / "truth.csv"})

    assert paths["truth"].exists()
    table = load_cohort(paths["cohort"], paths["metadata"])
    original = generate_cohort(config)
    assert table.attributes == original.table.attributes
    assert load_replacements(paths["replacements"]) == original.replacements
    truth = pd.read_csv(paths["truth"], index_col="patient")
    assert truth["class"].tolist() == original.truth["class"].tolist()


@pytest.mark.slow
def test_labeled_fractions_follow_the_profile():
    cohort = generate_cohort(SynthConfig(seed=11), n_jobs=2)
    labels, exclusions = label_periods(build_periods(fill_forward(cohort.table), cohort.replacements))
    fractions = class_distribution(labels.values()).fractions

    assert not exclusions
    for cls, target in zip(ProgressionClass, (0.63, 0.12, 0.20, 0.05)):
        assert fractions[cls] == pytest.approx(target, abs=0.02)


# P and S bits independent, one period per patient
INDEPENDENT_BITS = (0.5625, 0.1875, 0.1875, 0.0625)


def _held_out_duo_aucs(build_dataset, signal_strength):
    """Held-out AUC of the P and S forests of a duo trained on half of the patients."""

    config = SynthConfig(
        n_patients=6000,
        timepoints=(0, 3),
        n_informative_features=2,
        n_noise_features=2,
        class_fractions=INDEPENDENT_BITS,
        missingness=0.0,
        signal_strength=signal_strength,
        seed=5
    )
    dataset, _, _ = build_dataset(generate_cohort(config, n_jobs=2))
    patients = np.array([i.split(":")[0] for i in dataset.ids])
    held_out = set(np.random.default_rng(0).permutation(np.unique(patients))[: len(np.unique(patients)) // 2])
    test = np.array([p in held_out for p in patients])
    train_idx, test_idx = np.flatnonzero(~test), np.flatnonzero(test)

    _, X_train, X_test = dataset.encode(train_idx, test_idx)
    model = train_strategy(
        StrategyKind.DUO, X_train, dataset.classes[train_idx],
        ForestConfig(n_trees=30, max_depth=6, seed=2), dataset.distribution, n_jobs=2
    )
    bits = bit_targets(dataset.classes[test_idx])
    p, s = model.predict_duo_probabilities(X_test)
    return roc_curve(p, bits[:, 0]).auc, roc_curve(s, bits[:, 1]).auc


def test_knee_pain_ignores_the_pain_trajectory():
    config = SynthConfig(n_patients=2000, n_informative_features=1, n_noise_features=1, missingness=0.0,
                         signal_strength=(0.0, 0.0), seed=8)
    cohort = generate_cohort(config)
    start = cohort.table.frame.xs(0, level="timepoint")
    p_patients = cohort.truth["p"] == 1

    pain_rate = start.loc[:, ["knee_pain_l", "knee_pain_r"]].mean(axis=1)
    assert abs(pain_rate[p_patients].mean() - pain_rate[~p_patients].mean()) < 0.08


@pytest.mark.slow
def test_no_signal_gives_chance_level_duo(build_dataset):
    auc_p, auc_s = _held_out_duo_aucs(build_dataset, (0.0, 0.0))

    assert 0.45 <= auc_p <= 0.55
    assert 0.45 <= auc_s <= 0.55


@pytest.mark.slow
def test_noise_only_s_bit_stays_at_chance(build_dataset):
    auc_p, auc_s = _held_out_duo_aucs(build_dataset, (2.0, 0.0))

    assert auc_p > 0.7
    assert 0.45 <= auc_s <= 0.55
