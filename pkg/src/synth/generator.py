"""Synthetic longitudinal cohorts with a known progression class per patient.

Every patient is assigned a class up front. Pain and JSW trajectories are
linear with bounded noise and are kept clear of the labeling thresholds,
so every period of a patient labels as the patient's class:

- P patients either sit at sustained high pain or rise at >= 11 points/year.
- Non-P patients stay below 35 points, or start high and fall below 40
  within two years ("improvers").
- S patients narrow one knee by 0.35-0.6 mm/year; every other knee
  moves by at most 0.15 mm/year.

Feature columns see the class only through the latent P and S
propensities, whose class offset is `signal_strength`. At strength 0 no
feature carries the label.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..cohort import AttributeKind, AttributeMeta, CohortTable, write_cohort
from ..cohort.periods import MIN_PERIOD_YEARS
from ..labeling import ProgressionClass
from ..utils.errors import ConfigError
from ..utils.seeds import derive_rng

logger = logging.getLogger(__name__)

# Rising pain may be clipped at 100; the moderate-increase criterion
# still holds for such periods only up to this span.
MAX_SPAN_YEARS = 12

PAIN_NOISE = 1.0
JSW_NOISE = 0.01
SITES = ("A", "B", "C", "D", "E")

OUTCOME_COLUMNS = {
    "pain_left": "womac_pain_l",
    "pain_right": "womac_pain_r",
    "jsw_left": "jsw_l",
    "jsw_right": "jsw_r"
}


@dataclass(frozen=True)
class SynthConfig:
    n_patients: int = 1000
    timepoints: Tuple[int, ...] = (0, 2, 5, 8)
    n_informative_features: int = 30
    n_noise_features: int = 70
    class_fractions: Tuple[float, float, float, float] = (0.63, 0.12, 0.20, 0.05)
    missingness: float = 0.1
    signal_strength: Tuple[float, float] = (1.0, 1.0)
    replacement_rate: float = 0.0
    improver_fraction: float = 0.35
    outcomes_as_features: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_patients < 1:
            raise ConfigError("synth.n_patients must be positive")
        if self.n_informative_features < 0 or self.n_noise_features < 0:
            raise ConfigError("synth feature counts must be non-negative")

        if len(self.class_fractions) != 4 or any(f < 0 for f in self.class_fractions):
            raise ConfigError("synth.class_fractions needs four non-negative values (N, P, S, P+S)")
        if abs(sum(self.class_fractions) - 1.0) > 1e-6:
            raise ConfigError(f"synth.class_fractions must sum to 1, got {sum(self.class_fractions)}")

        for name in ("missingness", "replacement_rate", "improver_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"synth.{name} must be in [0, 1]")

        if len(self.signal_strength) != 2 or any(s < 0 for s in self.signal_strength):
            raise ConfigError("synth.signal_strength needs two non-negative values (P, S)")

        tps = list(self.timepoints)
        if any(b <= a for a, b in zip(tps, tps[1:])):
            raise ConfigError("synth.timepoints must be strictly increasing")
        if not tps or tps[-1] - tps[0] < MIN_PERIOD_YEARS:
            raise ConfigError(f"synth.timepoints must span at least {MIN_PERIOD_YEARS} years")
        if tps[-1] - tps[0] > MAX_SPAN_YEARS:
            raise ConfigError(f"synth.timepoints may span at most {MAX_SPAN_YEARS} years")

    @classmethod
    def from_config(cls, section: Mapping[str, Any], seed: int = 0) -> "SynthConfig":
        return cls(
            n_patients=int(section["n_patients"]),
            timepoints=tuple(int(t) for t in section["timepoints"]),
            n_informative_features=int(section["n_informative_features"]),
            n_noise_features=int(section["n_noise_features"]),
            class_fractions=tuple(float(f) for f in section["class_fractions"]),
            missingness=float(section["missingness"]),
            signal_strength=tuple(float(s) for s in section["signal_strength"]),
            replacement_rate=float(section.get("replacement_rate", 0.0)),
            improver_fraction=float(section.get("improver_fraction", 0.0)),
            outcomes_as_features=bool(section.get("outcomes_as_features", False)),
            seed=seed
        )


@dataclass(frozen=True)
class SyntheticCohort:
    table: CohortTable
    truth: pd.DataFrame
    replacements: Dict[str, int]

    @property
    def trajectories(self) -> pd.DataFrame:
        return self.table.frame[list(OUTCOME_COLUMNS.values())]


def class_quotas(n: int, fractions: Sequence[float]) -> np.ndarray:
    """Largest-remainder patient counts per class."""

    raw = np.asarray(fractions, dtype=float) * n
    counts = np.floor(raw).astype(np.int64)
    remainder = n - counts.sum()
    order = np.lexsort((np.arange(len(raw)), -(raw - counts)))
    counts[order[:remainder]] += 1
    return counts


def _feature_names(config: SynthConfig) -> Tuple[List[str], List[str]]:
    informative = [f"inf_{j:03d}" for j in range(config.n_informative_features)]
    noise = [f"noise_{j:03d}" for j in range(config.n_noise_features)]
    return informative, noise


def _metadata(config: SynthConfig) -> Dict[str, AttributeMeta]:
    informative, noise = _feature_names(config)
    C, O, N = AttributeKind.CATEGORICAL, AttributeKind.ORDINAL, AttributeKind.CONTINUOUS

    attributes: Dict[str, AttributeMeta] = {
        "barcode": AttributeMeta("barcode", C, excluded=True),
        "visit_date": AttributeMeta("visit_date", C, excluded=True),
        "site": AttributeMeta("site", C),
        "comorbidity": AttributeMeta("comorbidity", C, fill_forward=True, default_value=0),
        "age": AttributeMeta("age", N),
        "stiffness_minutes": AttributeMeta("stiffness_minutes", N)
    }
    for side in ("l", "r"):
        attributes[f"knee_pain_{side}"] = AttributeMeta(f"knee_pain_{side}", C)
        attributes[f"crepitus_{side}"] = AttributeMeta(f"crepitus_{side}", C)
        attributes[f"osteophytes_{side}"] = AttributeMeta(f"osteophytes_{side}", C)
        attributes[f"kl_{side}"] = AttributeMeta(f"kl_{side}", O)

    for j, name in enumerate(informative):
        attributes[name] = AttributeMeta(name, O if j % 5 == 4 else N)
    for j, name in enumerate(noise):
        attributes[name] = AttributeMeta(name, C if j % 4 == 3 else N)

    for column in OUTCOME_COLUMNS.values():
        attributes[column] = AttributeMeta(column, N, excluded=not config.outcomes_as_features)

    return attributes


def _pain_knee(rng: np.random.Generator, family: str, t: np.ndarray) -> np.ndarray:
    """Pain of the knee that carries the patient's pain class."""

    if family == "sustained":
        level = rng.uniform(45, 70) + rng.uniform(0, 2) * t
    elif family == "rising":
        level = rng.uniform(15, 25) + rng.uniform(11, 14) * t
    elif family == "improver":
        start = rng.uniform(45, 70)
        level = start - ((start - 40) / 2 + rng.uniform(1, 4)) * t
    else:
        level = rng.uniform(5, 20) + rng.uniform(-0.5, 0.5) * t
    return level + rng.uniform(-PAIN_NOISE, PAIN_NOISE, size=len(t))


def _quiet_knee(rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    return rng.uniform(0, 8) + rng.uniform(-0.5, 0.5) * t + rng.uniform(-PAIN_NOISE, PAIN_NOISE, size=len(t))


def _jsw(rng: np.random.Generator, narrowing: bool, t: np.ndarray) -> np.ndarray:
    rate = rng.uniform(0.35, 0.6) if narrowing else rng.uniform(-0.05, 0.15)
    span = t[-1]
    return rng.uniform(2, 5) + rate * (span - t) + rng.uniform(-JSW_NOISE, JSW_NOISE, size=len(t))


def _patient(
    config: SynthConfig,
    index: int,
    cls: ProgressionClass,
    loadings: np.ndarray,
    targets: np.ndarray
) -> Tuple[pd.DataFrame, Dict[str, Any], Optional[int]]:
    rng = derive_rng(config.seed, "patient", index)
    timepoints = np.asarray(config.timepoints)
    t = (timepoints - timepoints[0]).astype(float)
    n_t = len(t)
    pair = cls.label_pair

    if pair.p:
        family = "sustained" if rng.random() < 0.6 else "rising"
    else:
        family = "improver" if rng.random() < config.improver_fraction else "stable"

    pain_side = int(rng.integers(0, 2))
    jsw_side = int(rng.integers(0, 2))
    pain = [None, None]
    pain[pain_side] = _pain_knee(rng, family, t)
    pain[1 - pain_side] = _quiet_knee(rng, t)
    jsw = [None, None]
    jsw[jsw_side] = _jsw(rng, pair.s, t)
    jsw[1 - jsw_side] = _jsw(rng, False, t)

    strength_p, strength_s = config.signal_strength
    latent = np.array([
        strength_p * (2.0 * pair.p - 1.0) + rng.normal(),
        strength_s * (2.0 * pair.s - 1.0) + rng.normal()
    ])

    columns: Dict[str, np.ndarray] = {
        "barcode": np.array([f"BC{rng.integers(10**7, 10**8)}" for _ in range(n_t)], dtype=object),
        "visit_date": np.array([f"{2002 + int(tp)}-{rng.integers(1, 13):02d}-15" for tp in timepoints], dtype=object),
        "site": np.array([SITES[int(rng.integers(0, len(SITES)))]] * n_t, dtype=object),
        "comorbidity": np.array([float(rng.random() < 0.3)] + [np.nan] * (n_t - 1)),
        "age": np.round(rng.uniform(45, 80) + t, 1),
        "stiffness_minutes": np.round(rng.uniform(0, 60, size=n_t), 0)
    }

    for side, name, knee in (("l", "left", 0), ("r", "right", 1)):
        womac = np.round(np.clip(pain[knee], 0, 100), 1)
        kl = np.clip(np.round(1 + 0.8 * latent[1] + 0.1 * t + rng.normal(0, 0.7, size=n_t)), 0, 4)
        columns[f"knee_pain_{side}"] = (rng.random(n_t) < 1 / (1 + np.exp(-latent[0]))).astype(float)
        columns[f"crepitus_{side}"] = (rng.random(n_t) < 1 / (1 + np.exp(-latent[1]))).astype(float)
        columns[f"osteophytes_{side}"] = (kl >= 2).astype(float)
        columns[f"kl_{side}"] = kl
        columns[OUTCOME_COLUMNS[f"pain_{name}"]] = womac
        columns[OUTCOME_COLUMNS[f"jsw_{name}"]] = np.round(jsw[knee], 2)

    informative, noise = _feature_names(config)
    for j, name in enumerate(informative):
        base = loadings[j] * latent[targets[j]] + rng.normal()
        values = base + 0.2 * rng.normal(size=n_t)
        columns[name] = np.clip(np.round(values + 2), 0, 4) if j % 5 == 4 else np.round(values, 3)
    for j, name in enumerate(noise):
        if j % 4 == 3:
            columns[name] = rng.integers(0, 3, size=n_t).astype(float)
        else:
            columns[name] = np.round(rng.normal(size=n_t), 3)

    frame = pd.DataFrame(columns, index=pd.Index(timepoints.tolist(), name="timepoint"))

    replacement = None
    if rng.random() < config.replacement_rate:
        replacement = int(rng.choice(timepoints[1:]))

    truth = {
        "class": cls.display,
        "p": int(pair.p),
        "s": int(pair.s),
        "pain_family": family,
        "pain_knee": "left" if pain_side == 0 else "right",
        "jsw_knee": "left" if jsw_side == 0 else "right",
        "latent_p": float(latent[0]),
        "latent_s": float(latent[1])
    }
    return frame, truth, replacement


def _apply_missingness(frame: pd.DataFrame, columns: List[str], rate: float, seed: int) -> pd.DataFrame:
    if rate <= 0 or not columns:
        return frame
    rng = derive_rng(seed, "generator", "missingness")
    mask = rng.random((len(frame), len(columns))) < rate
    for j, column in enumerate(columns):
        masked = frame[column].mask(mask[:, j])
        if masked.dtype == object:
            masked = masked.where(masked.notna(), None)
        frame[column] = masked
    return frame


def generate_cohort(config: SynthConfig, n_jobs: int = 1) -> SyntheticCohort:
    """Generate a cohort and the per-patient ground truth behind it."""

    rng = derive_rng(config.seed, "generator")
    counts = class_quotas(config.n_patients, config.class_fractions)
    classes = rng.permutation(np.repeat(np.arange(4), counts))

    loadings = rng.uniform(0.3, 1.0, size=config.n_informative_features)
    targets = np.arange(config.n_informative_features) % 2

    ids = [f"P{i:05d}" for i in range(config.n_patients)]
    items = [(config, i, ProgressionClass(int(c)), loadings, targets) for i, c in enumerate(classes)]
    if n_jobs == 1:
        results = [_patient(*item) for item in items]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_patient)(*item) for item in items)

    frames, truths, replacements = [], [], {}
    for patient, (frame, truth, replacement) in zip(ids, results):
        frames.append(frame)
        truths.append(truth)
        if replacement is not None:
            replacements[patient] = replacement

    frame = pd.concat(frames, keys=ids, names=["patient", "timepoint"])

    attributes = _metadata(config)
    maskable = [
        name for name, meta in attributes.items()
        if not meta.excluded and name not in OUTCOME_COLUMNS.values()
    ]
    frame = _apply_missingness(frame, maskable, config.missingness, config.seed)
    frame = frame[list(attributes)]

    table = CohortTable(
        frame=frame,
        attributes=attributes,
        outcomes=dict(OUTCOME_COLUMNS)
    )
    truth = pd.DataFrame(truths, index=pd.Index(ids, name="patient"))

    logger.info(
        f"Generated {config.n_patients} synthetic patients over {len(config.timepoints)} timepoints "
        f"(class counts {counts.tolist()}, {len(replacements)} replacements)"
    )

    return SyntheticCohort(table=table, truth=truth, replacements=replacements)


def write_synthetic(
    out_dir: Path,
    config: SynthConfig,
    n_jobs: int = 1,
    paths: Optional[Mapping[str, Path]] = None
) -> Dict[str, Path]:
    """Write cohort CSV, metadata YAML, replacements CSV and the ground-truth sidecar.

    `paths` overrides individual file locations (keys cohort, metadata,
    replacements, truth); the rest go to `out_dir`.
    """

    out_dir = Path(out_dir)
    cohort = generate_cohort(config, n_jobs)

    resolved = {
        "cohort": out_dir / "cohort.csv",
        "metadata": out_dir / "metadata.yaml",
        "replacements": out_dir / "replacements.csv",
        "truth": out_dir / "truth.csv"
    }
    resolved.update({key: Path(value) for key, value in (paths or {}).items() if value is not None})
    paths = resolved
    for path in paths.values():
        path.parent.mkdir(parents=True, exist_ok=True)

    write_cohort(cohort.table, paths["cohort"], paths["metadata"])

    replacements = pd.DataFrame(
        sorted(cohort.replacements.items()),
        columns=["patient", "timepoint"]
    )
    replacements.to_csv(paths["replacements"], index=False, lineterminator="\n")
    cohort.truth.to_csv(paths["truth"], lineterminator="\n")

    logger.info(f"Wrote synthetic cohort files to {out_dir}")

    return paths
