import json

import numpy as np
import pytest

from src.evaluation import PredictionStore
from src.training import CLASS_LABELS, FORMAT_VERSION, ModelExporter, ModelTrainer, ModelValidator
from src.utils.config import load_config
from src.utils.errors import ModelFormatError


@pytest.fixture(scope="module")
def final_model(dataset):
    config = load_config(None)
    config["forest"]["n_trees"] = 5
    config["seed"] = 4
    return ModelTrainer(config, config_hash="abc").train(dataset)


class TestTrainer:

    def test_trains_on_every_period(self, dataset, final_model):
        classes, pairs = final_model.predict(dataset.frame)

        assert final_model.kind.value == "duo"
        assert final_model.config_hash == "abc"
        assert final_model.seed == 4
        assert classes.shape == (dataset.n_instances,)
        assert pairs.shape == (dataset.n_instances, 2)
        assert ((pairs >= 0) & (pairs <= 1)).all()
        assert len(final_model.feature_names) == final_model.model.n_features

    def test_training_is_reproducible(self, dataset, final_model):
        config = load_config(None)
        config["forest"]["n_trees"] = 5
        config["seed"] = 4
        again = ModelTrainer(config, config_hash="abc").train(dataset, n_jobs=2)

        assert again.model.to_dict() == final_model.model.to_dict()


class TestExporter:

    def test_export_and_load(self, tmp_path, dataset, final_model):
        exporter = ModelExporter()
        path = exporter.export(final_model, tmp_path / "model.json")
        loaded = exporter.load(path)

        assert loaded.feature_names == final_model.feature_names
        assert loaded.config_hash == "abc"
        for a, b in zip(loaded.predict(dataset.frame), final_model.predict(dataset.frame)):
            np.testing.assert_array_equal(a, b)

    def test_export_is_byte_stable(self, tmp_path, final_model):
        exporter = ModelExporter()
        first = exporter.export(final_model, tmp_path / "a.json").read_bytes()
        second = exporter.export(final_model, tmp_path / "b.json").read_bytes()

        assert first == second
        assert json.loads(first)["format_version"] == FORMAT_VERSION

    def test_rejects_other_versions(self, final_model):
        exporter = ModelExporter()
        document = exporter.to_document(final_model)
        document["format_version"] = FORMAT_VERSION + 1

        with pytest.raises(ModelFormatError, match="Unsupported"):
            exporter.from_document(document)

    def test_rejects_malformed_documents(self, tmp_path, final_model):
        exporter = ModelExporter()
        with pytest.raises(ModelFormatError):
            exporter.from_document([1, 2])

        document = exporter.to_document(final_model)
        del document["model"]
        with pytest.raises(ModelFormatError, match="Malformed"):
            exporter.from_document(document)

        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(ModelFormatError):
            exporter.load(broken)
        with pytest.raises(FileNotFoundError):
            exporter.load(tmp_path / "missing.json")


class TestValidator:

    def test_report(self):
        report = ModelValidator().validate([0, 1, 2, 3], [0, 1, 2, 0])

        assert report["accuracy"] == pytest.approx(0.75)
        assert list(report["per_class"]) == CLASS_LABELS
        assert report["per_class"]["P+S"]["recall"] == 0.0
        assert report["confusion_matrix"][3] == [1, 0, 0, 0]

    def test_constant_bit_has_no_curve(self):
        curves = ModelValidator().pair_roc([0, 0, 2, 2], [0.1, 0.2, 0.3, 0.4], [0.1, 0.2, 0.8, 0.9])

        assert list(curves) == ["S"]
        assert curves["S"].auc == pytest.approx(1.0)

    def test_median_run_report(self, prediction_frame):
        report = ModelValidator().validate_median_run(PredictionStore(prediction_frame), "good")

        assert (report["repeat"], report["seed"]) == (0, 1)
        assert report["f1_weighted"] == pytest.approx(2 / 3)
        assert report["auc"] == pytest.approx({"P": 0.75, "S": 0.75})
