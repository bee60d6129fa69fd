"""Pipeline stages behind the command-line interface."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .cohort import AttributeMeta, PeriodRecord, build_periods, load_cohort, load_replacements, periods_to_frame
from .evaluation import (
    CurveSettings,
    CvSettings,
    LabeledDataset,
    ParameterGrid,
    PredictionStore,
    bbc_cv,
    curve_table,
    learning_curve,
    median_run,
    repeated_cv,
    score_configuration,
    tune_grid
)
from .explain import explain_strategy, explained_outputs, local_accuracy_error, summarize_impact
from .forest import ForestConfig
from .labeling import Exclusion, ProgressionClass, class_distribution, label_periods
from .preprocess import FilterReport, PreprocessPlan, fill_forward, filter_table
from .rfe import run_rfe_cv
from .selection import (
    conventional_inputs,
    conventional_select,
    ml_label_select,
    ml_prob_select,
    selection_report,
    unevaluable
)
from .strategies import StrategyKind
from .synth import SynthConfig, write_synthetic
from .training import ModelExporter, ModelTrainer, ModelValidator
from .utils.artifacts import run_header, write_table, write_yaml
from .utils.config import config_hash
from .utils.errors import PipelineError
from .utils.performance import PerformanceMonitor

logger = logging.getLogger(__name__)

STAGES = ("synth", "label", "preprocess", "train", "evaluate", "curve", "tune", "bbc", "rfe", "explain", "select")

EVALUATE_CONFIG_ID = "default"


def _plain(value: Any) -> Any:
    """Convert numpy scalars and containers for YAML output."""

    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def _file_label(output: str) -> str:
    return output.replace("+", "")


@dataclass(frozen=True)
class LabeledCohort:
    periods: List[PeriodRecord]
    labels: Dict[str, ProgressionClass]
    exclusions: List[Exclusion]
    frame: pd.DataFrame
    attributes: Dict[str, AttributeMeta]

    @property
    def classes(self) -> np.ndarray:
        return np.array([int(self.labels[i]) for i in self.frame.index], dtype=np.int64)


class PipelineRunner:
    """Runs one stage at a time and writes its artifacts to the output directory.

    Every CSV carries a run header with the config hash, seed and version;
    `summary_<stage>.yaml` holds deterministic results and
    `timings_<stage>.yaml` the wall-clock timings.
    """

    def __init__(self, config: Dict[str, Any], out_dir: Optional[Path] = None, workers: int = 1):
        self.config = config
        self.out_dir = Path(out_dir or config["data"]["output_dir"])
        self.workers = workers
        self.seed = int(config["seed"])
        self.config_hash = config_hash(config)
        self.header = run_header(self.config_hash, self.seed, __version__)
        self.monitor = PerformanceMonitor()

        self.kind = StrategyKind(config["strategy"])
        self.forest_config = ForestConfig.from_config(config["forest"], seed=self.seed)
        self.plan = PreprocessPlan.from_config(config["preprocess"])
        self.cv_settings = CvSettings.from_config(config)

        self._cohort: Optional[LabeledCohort] = None
        self._dataset: Optional[Tuple[LabeledDataset, FilterReport]] = None

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def run(self, stage: str) -> Dict[str, Any]:
        """Run a stage; write its summary and timings."""

        handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
            "synth": self.synth,
            "label": self.label,
            "preprocess": self.preprocess,
            "train": self.train,
            "evaluate": self.evaluate,
            "curve": self.curve,
            "tune": self.tune,
            "bbc": self.bbc,
            "rfe": self.rfe,
            "explain": self.explain,
            "select": self.select
        }
        if stage not in handlers:
            raise ValueError(f"Unknown stage '{stage}'")

        logger.info(f"Running stage '{stage}' (config {self.config_hash}, seed {self.seed}, {self.workers} workers)")
        self.out_dir.mkdir(parents=True, exist_ok=True)

        with self.monitor.timed(stage):
            summary = handlers[stage]()

        summary = {"stage": stage, "config_hash": self.config_hash, "seed": self.seed, "version": __version__, **summary}
        write_yaml(_plain(summary), self.path(f"summary_{stage}.yaml"))

        write_yaml(_plain(self.monitor.get_stats()), self.path(f"timings_{stage}.yaml"))
        logger.info(f"Stage '{stage}' finished in {self.monitor.total(stage):.1f}s")

        return summary

    # Inputs

    def labeled_cohort(self) -> LabeledCohort:
        if self._cohort is None:
            data = self.config["data"]
            with self.monitor.timed("load_cohort"):
                table = fill_forward(load_cohort(Path(data["cohort"]), Path(data["metadata"])))
                replacements = load_replacements(Path(data["replacements"]) if data.get("replacements") else None)

            with self.monitor.timed("label_periods"):
                periods = build_periods(
                    table,
                    replacements,
                    exclude_replacement_visit=bool(self.config["cohort"]["exclude_replacement_visit"])
                )
                labels, exclusions = label_periods(periods, self.config["cohort"]["pain_mode"])
                labeled = [p for p in periods if p.period_id in labels]
                frame = periods_to_frame(labeled, list(table.attributes))

            self.monitor.count("periods", len(periods))
            self.monitor.count("labeled_periods", len(labeled))
            self._cohort = LabeledCohort(
                periods=periods,
                labels=labels,
                exclusions=exclusions,
                frame=frame,
                attributes=dict(table.attributes)
            )
        return self._cohort

    def dataset(self) -> Tuple[LabeledDataset, FilterReport]:
        if self._dataset is None:
            cohort = self.labeled_cohort()
            with self.monitor.timed("filter"):
                frame, report = filter_table(cohort.frame, cohort.attributes, self.plan)
            self.monitor.count("instances", len(frame))
            classes = np.array([int(cohort.labels[i]) for i in frame.index], dtype=np.int64)
            self._dataset = LabeledDataset(frame=frame, classes=classes, attributes=cohort.attributes, plan=self.plan), report
        return self._dataset

    def load_store(self, name: str, producer: str) -> PredictionStore:
        path = self.path(name)
        if not path.exists():
            raise PipelineError(f"{path} not found; run the '{producer}' stage first")
        return PredictionStore.load(path)

    # Stages

    def synth(self) -> Dict[str, Any]:
        synth_config = SynthConfig.from_config(self.config["synth"], seed=self.seed)
        data = self.config["data"]
        paths = write_synthetic(
            Path(data["cohort"]).parent,
            synth_config,
            n_jobs=self.workers,
            paths={"cohort": data["cohort"], "metadata": data["metadata"], "replacements": data.get("replacements")}
        )
        return {"patients": synth_config.n_patients, "files": {k: str(v) for k, v in paths.items()}}

    def label(self) -> Dict[str, Any]:
        cohort = self.labeled_cohort()
        ids = list(cohort.frame.index)

        write_table(pd.DataFrame({
            "period": ids,
            "class": [cohort.labels[i].display for i in ids]
        }), self.path("labels.csv"), self.header)
        write_table(pd.DataFrame(
            [(e.period_id, e.reason) for e in cohort.exclusions],
            columns=["period", "reason"]
        ), self.path("exclusions.csv"), self.header)

        distribution = class_distribution(cohort.labels.values())
        reasons = pd.Series([e.reason for e in cohort.exclusions], dtype=object).value_counts().sort_index()

        return {
            "periods": len(cohort.periods),
            "labeled": len(ids),
            "excluded": {str(reason): int(count) for reason, count in reasons.items()},
            "distribution": {c.display: int(distribution.counts[c]) for c in ProgressionClass}
        }

    def preprocess(self) -> Dict[str, Any]:
        dataset, report = self.dataset()
        transform = dataset.fit(np.arange(dataset.n_instances))
        transform.save(self.path("transform.yaml"))
        return {
            "instances": dataset.n_instances,
            "encoded_features": transform.width,
            "filter": report.to_dict(),
            "distribution": dict(zip([c.display for c in ProgressionClass], dataset.distribution.tolist()))
        }

    def train(self) -> Dict[str, Any]:
        dataset, _ = self.dataset()
        final = ModelTrainer(self.config, self.config_hash).train(dataset, n_jobs=self.workers)
        ModelExporter().export(final, self.path("model.json"))

        importance = final.model.feature_importance()
        write_table(pd.DataFrame({
            "feature": final.feature_names,
            "importance": importance
        }).sort_values("importance", ascending=False, kind="mergesort"), self.path("importance.csv"), self.header)

        return {
            "strategy": final.kind.value,
            "instances": dataset.n_instances,
            "features": len(final.feature_names),
            "forests": len(final.model.forests)
        }

    def evaluate(self) -> Dict[str, Any]:
        dataset, _ = self.dataset()
        store = repeated_cv(dataset, self.kind, self.forest_config, self.cv_settings, EVALUATE_CONFIG_ID, self.workers)
        store.save(self.path("predictions_evaluate.csv"), self.header)

        summary = score_configuration(store, EVALUATE_CONFIG_ID)
        validator = ModelValidator(self.config)
        report = validator.validate_median_run(store, EVALUATE_CONFIG_ID)

        frame = store.frame
        rows = frame[(frame["repeat"] == report["repeat"]) & (frame["seed"] == report["seed"])]
        curves = validator.pair_roc(rows["true"].to_numpy(), rows["p_p"].to_numpy(), rows["p_s"].to_numpy())
        roc = pd.concat([
            pd.DataFrame({"output": name, "fpr": curve.fpr, "tpr": curve.tpr})
            for name, curve in curves.items()
        ], ignore_index=True) if curves else pd.DataFrame(columns=["output", "fpr", "tpr"])
        write_table(roc, self.path("roc.csv"), self.header)

        logger.info(f"Weighted F1 median {summary.median:.4f} [{summary.ci_low:.4f}, {summary.ci_high:.4f}]")

        return {"score": summary.to_dict(), "median_run": report}

    def curve(self) -> Dict[str, Any]:
        dataset, _ = self.dataset()
        settings = CurveSettings.from_config(self.config["curve"])
        points, store = learning_curve(dataset, self.kind, self.forest_config, self.cv_settings, settings, self.workers)

        store.save(self.path("predictions_curve.csv"), self.header)
        write_table(curve_table(points), self.path("curve.csv"), self.header)

        return {"mode": settings.mode, "algorithm": settings.algorithm, "points": [p.to_dict() for p in points]}

    def tune(self) -> Dict[str, Any]:
        dataset, _ = self.dataset()
        grid = ParameterGrid.from_config(self.config["tuning"])
        result = tune_grid(dataset, self.kind, grid, self.forest_config, self.cv_settings, self.workers)

        result.store.save(self.path("predictions_tune.csv"), self.header)
        write_table(pd.DataFrame([
            {
                "config": s.config,
                "median": s.median,
                "ci_low": s.ci_low,
                "ci_high": s.ci_high,
                "mad": s.mad,
                "min": s.min_score,
                "max": s.max_score
            }
            for s in result.summaries
        ]), self.path("tuning.csv"), self.header)

        return {"configurations": len(grid), "best": result.best_id, "best_config": result.best_config.to_dict()}

    def bbc(self) -> Dict[str, Any]:
        store = self.load_store("predictions_tune.csv", "tune")
        result = bbc_cv(store, n_boot=int(self.config["bbc"]["n_boot"]), seed=self.seed)

        write_table(pd.DataFrame({"oob_score": result.oob_scores}), self.path("bbc_scores.csv"), self.header)
        return result.to_dict()

    def rfe(self) -> Dict[str, Any]:
        dataset, _ = self.dataset()
        result = run_rfe_cv(
            dataset,
            self.kind,
            self.forest_config,
            self.cv_settings,
            inner_k=int(self.config["rfe"]["inner_folds"]),
            n_jobs=self.workers
        )

        result.store.save(self.path("predictions_rfe.csv"), self.header)
        write_table(result.frequency, self.path("rfe_frequency.csv"), self.header)
        write_table(result.trace_table(), self.path("rfe_traces.csv"), self.header)

        summary = {"score": score_configuration(result.store, "rfe").to_dict(), **result.summary()}
        if self.path("predictions_evaluate.csv").exists():
            all_features = self.load_store("predictions_evaluate.csv", "evaluate")
            summary["all_features_score"] = score_configuration(all_features, EVALUATE_CONFIG_ID).to_dict()
        return summary

    def explain(self) -> Dict[str, Any]:
        final = ModelExporter().load(self.path("model.json"))
        dataset, _ = self.dataset()

        frame = dataset.frame
        limit = self.config["explain"].get("max_instances")
        if limit is not None:
            frame = frame.iloc[:int(limit)]
        X = final.encode(frame)

        attributions = explain_strategy(final.model, X, final.feature_names, n_jobs=self.workers)
        error = local_accuracy_error(attributions, explained_outputs(final.model, X))
        logger.info(f"Explained {len(X)} instances; largest local accuracy error {error:.2e}")

        summary: Dict[str, Any] = {"instances": len(X), "local_accuracy_error": error, "top_features": {}}
        for output, attribution in attributions.items():
            impact = summarize_impact(attribution, X, final.feature_names, list(frame.index))
            label = _file_label(output)
            write_table(impact.ranking, self.path(f"shap_{label}_ranking.csv"), self.header)
            write_table(impact.scatter, self.path(f"shap_{label}_scatter.csv"), self.header)
            summary["top_features"][output] = impact.top_features[:10]
        return summary

    def select(self) -> Dict[str, Any]:
        section = self.config["selection"]
        mode = section["mode"]
        store = self.load_store("predictions_evaluate.csv", "evaluate")

        repeat, seed = median_run(store, EVALUATE_CONFIG_ID)
        frame = store.frame
        rows = frame[(frame["config"] == EVALUATE_CONFIG_ID) & (frame["repeat"] == repeat) & (frame["seed"] == seed)]
        rows = rows.sort_values("instance", kind="mergesort")
        ids = rows["instance"].tolist()
        truth = rows["true"].to_numpy(dtype=np.int64)

        extra: Dict[str, Any] = {"median_run": {"repeat": repeat, "seed": seed}}
        conventional = None
        if mode == "conventional" or (mode == "ml-p" and section["match_count"]):
            inputs = conventional_inputs(self.labeled_cohort().frame.loc[ids], section["columns"])
            conventional = conventional_select(inputs)
            extra["conventional_selected"] = int(conventional.sum())
            extra["unevaluable"] = int(unevaluable(inputs).sum())

        if mode == "conventional":
            mask = conventional
        elif mode == "ml-l":
            mask = ml_label_select(rows["pred"].to_numpy())
        else:
            target = int(conventional.sum()) if conventional is not None else int(ml_label_select(rows["pred"].to_numpy()).sum())
            mask = ml_prob_select(rows["p_p"].to_numpy(), rows["p_s"].to_numpy(), target, ids=ids)
            if conventional is not None and mask.sum() != conventional.sum():
                raise PipelineError("Probability selection did not match the conventional selection count")

        report = selection_report(mask, truth)
        write_table(report.to_frame(), self.path(f"selection_{mode}.csv"), self.header)
        write_table(pd.DataFrame({"instance": ids, "selected": mask.astype(int)}), self.path(f"selected_{mode}.csv"), self.header)

        return {"mode": mode, **report.to_dict(), **extra}
