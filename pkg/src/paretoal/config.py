"""Experiment configuration: dataclasses plus strict JSON loading.

Config files are JSON objects whose keys mirror the dataclass fields exactly;
unknown keys anywhere are errors, so typos fail fast instead of silently
running defaults.
"""

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .data import SyntheticSpec
from .errors import ConfigError
from .idscore import GmmConfig
from .learner import TrainConfig
from .pareto import PoalConfig
from .strategies import parse_strategy


@dataclass(frozen=True)
class DatasetConfig:
    """Either a file source (``path`` + ``format``) or a synthetic spec."""

    path: str | None = None
    format: str = "libsvm"
    test_path: str | None = None
    label_col: object = "label"
    header: bool = True
    synthetic: SyntheticSpec | None = None

    def __post_init__(self):
        if (self.path is None) == (self.synthetic is None):
            raise ConfigError("dataset needs exactly one of 'path' or 'synthetic'")
        if self.format not in ("libsvm", "csv"):
            raise ConfigError(f"unknown dataset format {self.format!r}")
        if self.synthetic is not None and self.test_path is not None:
            raise ConfigError("test_path applies to file datasets only")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig
    n_test: int
    n_init: int
    budget: int
    batch_size: int
    strategy: str
    trials: int
    name: str = "experiment"
    id_classes: list | None = None
    ood_classes: list | None = None
    per_class_cap: int | None = None
    learner: TrainConfig = field(default_factory=TrainConfig)
    id_scorer: str = "gmm"
    gmm_max_components: int = 3
    pareto: PoalConfig = field(default_factory=PoalConfig)
    base_seed: int = 0

    def __post_init__(self):
        for attr in ("n_test", "n_init", "budget", "batch_size", "trials"):
            if int(getattr(self, attr)) < 1:
                raise ConfigError(f"{attr} must be >= 1")
        parse_strategy(self.strategy)  # validates the name
        if self.id_scorer not in ("gmm", "tied"):
            raise ConfigError(f"id_scorer must be 'gmm' or 'tied', got {self.id_scorer!r}")
        if self.gmm_max_components < 1:
            raise ConfigError("gmm_max_components must be >= 1")
        if self.per_class_cap is not None and self.per_class_cap < 1:
            raise ConfigError("per_class_cap must be >= 1 when set")
        if self.dataset.synthetic is not None and self.id_classes is not None:
            raise ConfigError("id_classes applies to file datasets only")
        if self.id_classes is not None and len(self.id_classes) == 0:
            raise ConfigError("id_classes must be non-empty when set")

    def gmm_config(self, seed) -> GmmConfig:
        return GmmConfig(max_components=self.gmm_max_components, seed=seed)


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    return cls(**data)


def _synthetic_from(data: dict) -> SyntheticSpec:
    data = dict(data)
    if "centers" in data:
        data["centers"] = tuple(tuple(float(v) for v in c) for c in data["centers"])
    if "ood_direction" in data:
        data["ood_direction"] = tuple(float(v) for v in data["ood_direction"])
    return _build(SyntheticSpec, data, "dataset.synthetic")


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    data = dict(raw)
    if "dataset" not in data:
        raise ConfigError("config needs a 'dataset' section")
    ds_raw = dict(data["dataset"])
    if "synthetic" in ds_raw and ds_raw["synthetic"] is not None:
        ds_raw["synthetic"] = _synthetic_from(ds_raw["synthetic"])
    data["dataset"] = _build(DatasetConfig, ds_raw, "dataset")
    for key, cls in (("learner", TrainConfig), ("pareto", PoalConfig)):
        if key in data and data[key] is not None:
            section = data[key]
            if not isinstance(section, dict):
                raise ConfigError(f"'{key}' must be an object")
            try:
                data[key] = _build(cls, section, key)
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"invalid '{key}' section: {exc}") from exc
    try:
        return _build(ExperimentConfig, data, "config")
    except TypeError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def load_synthetic_spec(path) -> SyntheticSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("synthetic spec must be a JSON object")
    return _synthetic_from(raw)


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Config with every default materialized, as plain JSON-ready data."""
    return dataclasses.asdict(cfg)
