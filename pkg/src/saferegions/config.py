"""Experiment configuration loaded from a nested YAML file.

Every field is validated up front, before any data generation or training
starts, so a bad config fails in milliseconds.  Unknown keys are rejected to
catch typos.  The resolved form (all defaults materialized) is written next
to the outputs of every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .classifiers import Hyperparameters, TrainSettings
from .datagen import GaussianSpec
from .errors import InvalidArgument
from .families import TRAINERS
from .kernels import KernelSpec
from .platoon import PlatoonRanges
from .scaling import min_calibration_size

__all__ = [
    "DataConfig",
    "ClassifierConfig",
    "RiskConfig",
    "GridConfig",
    "ExperimentConfig",
    "load_config",
]

_GENERATORS = ("gaussian", "platoon", "csv")

# The two-unit-Gaussian benchmark: well separated classes on the diagonal.
_DEFAULT_GAUSSIAN = {
    "mu_safe": [-1.0, -1.0],
    "mu_unsafe": [1.0, 1.0],
    "cov_safe": [[1.0, 0.0], [0.0, 1.0]],
    "cov_unsafe": [[1.0, 0.0], [0.0, 1.0]],
    "safe_prob": 0.5,
    "outlier_prob": 0.0,
}


def _take(mapping: dict, context: str, **defaults):
    """Pop known keys with defaults; leftover keys are a config error."""
    out = {}
    mapping = dict(mapping)
    for key, default in defaults.items():
        out[key] = mapping.pop(key, default)
    if mapping:
        raise InvalidArgument(f"unknown config keys in {context}: {sorted(mapping)}")
    return out


def _mapping(value, context: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise InvalidArgument(f"{context} must be a mapping, got {type(value).__name__}")
    return value


def _float_list(value, context: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise InvalidArgument(f"{context} must be a non-empty list")
    out = tuple(float(v) for v in value)
    if len(set(out)) != len(out):
        raise InvalidArgument(f"{context} contains duplicates: {list(out)}")
    return out


@dataclass(frozen=True)
class DataConfig:
    """Where the train/calibration/test splits come from."""

    generator: str = "gaussian"
    n_train: int = 1000
    n_test: int = 10000
    standardize: bool = True
    gaussian: GaussianSpec | None = None
    platoon: PlatoonRanges | None = None
    paths: dict | None = None     # csv generator: train/calib/test file paths

    def __post_init__(self):
        if self.generator not in _GENERATORS:
            raise InvalidArgument(
                f"unknown generator {self.generator!r}, expected one of {_GENERATORS}")
        if self.generator == "csv":
            paths = self.paths or {}
            missing = [k for k in ("train", "calib", "test") if not paths.get(k)]
            if missing:
                raise InvalidArgument(f"csv generator needs paths for {missing}")
        else:
            # 0 is allowed so `generate` can emit header-only files
            if int(self.n_train) < 0:
                raise InvalidArgument(f"n_train must be >= 0, got {self.n_train}")
            if int(self.n_test) < 0:
                raise InvalidArgument(f"n_test must be >= 0, got {self.n_test}")

    @classmethod
    def from_mapping(cls, raw) -> "DataConfig":
        raw = _mapping(raw, "data")
        fields = _take(raw, "data", generator="gaussian", n_train=1000, n_test=10000,
                       standardize=True, gaussian=None, platoon=None, paths=None)
        generator = fields["generator"]
        gaussian = platoon = None
        if generator == "gaussian":
            spec = {**_DEFAULT_GAUSSIAN, **_mapping(fields["gaussian"], "data.gaussian")}
            spec = _take(spec, "data.gaussian", **_DEFAULT_GAUSSIAN)
            gaussian = GaussianSpec(
                mu_safe=tuple(spec["mu_safe"]), mu_unsafe=tuple(spec["mu_unsafe"]),
                cov_safe=tuple(map(tuple, spec["cov_safe"])),
                cov_unsafe=tuple(map(tuple, spec["cov_unsafe"])),
                safe_prob=float(spec["safe_prob"]),
                outlier_prob=float(spec["outlier_prob"]))
        elif generator == "platoon":
            defaults = PlatoonRanges()
            spec = _take(_mapping(fields["platoon"], "data.platoon"), "data.platoon",
                         **{name: getattr(defaults, name) for name in
                            ("n_followers", "gap", "speed_kmh", "brake_force",
                             "mass", "delay", "packet_error_rate", "control_gain")})
            platoon = PlatoonRanges(**{k: tuple(v) for k, v in spec.items()})
        paths = fields["paths"]
        if generator == "csv":
            paths = _take(_mapping(paths, "data.paths"), "data.paths",
                          train=None, calib=None, test=None)
        return cls(generator=generator, n_train=int(fields["n_train"]),
                   n_test=int(fields["n_test"]), standardize=bool(fields["standardize"]),
                   gaussian=gaussian, platoon=platoon, paths=paths)

    def to_mapping(self) -> dict:
        out = {"generator": self.generator, "standardize": self.standardize}
        if self.generator == "csv":
            out["paths"] = dict(self.paths)
        else:
            out["n_train"] = int(self.n_train)
            out["n_test"] = int(self.n_test)
        if self.gaussian is not None:
            out["gaussian"] = self.gaussian.to_record()
        if self.platoon is not None:
            out["platoon"] = self.platoon.to_record()
        return out


@dataclass(frozen=True)
class ClassifierConfig:
    """Variants to run and the hyperparameter family grid, shared by all
    variants: the family is the cross product etas x taus x kernels."""

    variants: tuple = ("svm",)
    etas: tuple = (1.0,)
    taus: tuple = (0.5,)
    kernels: tuple = (KernelSpec(),)
    tol: float = 1e-6
    max_iter: int | None = None

    def __post_init__(self):
        if len(self.variants) == 0:
            raise InvalidArgument("classifier.variants must not be empty")
        unknown = [v for v in self.variants if v not in TRAINERS]
        if unknown:
            raise InvalidArgument(
                f"unknown variants {unknown}, expected a subset of {sorted(TRAINERS)}")
        if len(set(self.variants)) != len(self.variants):
            raise InvalidArgument(f"duplicate variants in {list(self.variants)}")
        # constructing every member validates the whole grid now
        for hp in self.family():
            assert hp is not None

    def family(self) -> list:
        return [Hyperparameters(eta=eta, tau=tau, kernel=kernel)
                for eta in self.etas for tau in self.taus for kernel in self.kernels]

    def train_settings(self) -> TrainSettings:
        return TrainSettings(tol=self.tol, max_iter=self.max_iter)

    @classmethod
    def from_mapping(cls, raw) -> "ClassifierConfig":
        raw = _mapping(raw, "classifier")
        fields = _take(raw, "classifier", variants=["svm"], etas=[1.0], taus=[0.5],
                       kernels=[{"kind": "gaussian"}], tol=1e-6, max_iter=None)
        variants = fields["variants"]
        if isinstance(variants, str):
            variants = [variants]
        kernels = []
        for entry in fields["kernels"]:
            entry = _take(_mapping(entry, "classifier.kernels[]"), "classifier.kernels[]",
                          kind="gaussian", gamma=None, degree=3, coef0=0.0)
            kernels.append(KernelSpec(kind=entry["kind"],
                                      gamma=None if entry["gamma"] is None
                                      else float(entry["gamma"]),
                                      degree=int(entry["degree"]),
                                      coef0=float(entry["coef0"])))
        max_iter = fields["max_iter"]
        return cls(variants=tuple(variants),
                   etas=_float_list(fields["etas"], "classifier.etas"),
                   taus=_float_list(fields["taus"], "classifier.taus"),
                   kernels=tuple(kernels), tol=float(fields["tol"]),
                   max_iter=None if max_iter is None else int(max_iter))

    def to_mapping(self) -> dict:
        return {
            "variants": list(self.variants),
            "etas": [float(v) for v in self.etas],
            "taus": [float(v) for v in self.taus],
            "kernels": [k.to_record() for k in self.kernels],
            "tol": float(self.tol),
            "max_iter": self.max_iter,
        }


@dataclass(frozen=True)
class RiskConfig:
    """Risk levels to sweep and the shared confidence/rank parameters."""

    eps: tuple = (0.05,)
    delta: float = 1e-6
    beta: float = 0.5
    n_c: int | None = None    # explicit calibration size shared by all eps

    def __post_init__(self):
        for eps in self.eps:
            # raises on out-of-range values; result unused here
            min_calibration_size(eps, self.delta, self.beta)
        if self.n_c is not None and int(self.n_c) < 1:
            raise InvalidArgument(f"risk.n_c must be positive, got {self.n_c}")

    @classmethod
    def from_mapping(cls, raw) -> "RiskConfig":
        raw = _mapping(raw, "risk")
        fields = _take(raw, "risk", eps=[0.05], delta=1e-6, beta=0.5, n_c=None)
        eps = fields["eps"]
        if isinstance(eps, (int, float)):
            eps = [eps]
        n_c = fields["n_c"]
        return cls(eps=_float_list(eps, "risk.eps"), delta=float(fields["delta"]),
                   beta=float(fields["beta"]), n_c=None if n_c is None else int(n_c))

    def to_mapping(self) -> dict:
        return {"eps": [float(v) for v in self.eps], "delta": float(self.delta),
                "beta": float(self.beta), "n_c": self.n_c}


@dataclass(frozen=True)
class GridConfig:
    """2-D boundary export: uniform resolution x resolution grid over bbox
    (x1_min, x1_max, x2_min, x2_max); bbox defaults to the data extent plus
    a margin."""

    resolution: int = 50
    bbox: tuple | None = None
    margin: float = 0.5

    def __post_init__(self):
        if int(self.resolution) < 2:
            raise InvalidArgument(f"grid.resolution must be >= 2, got {self.resolution}")
        if self.bbox is not None:
            if len(self.bbox) != 4:
                raise InvalidArgument(f"grid.bbox needs 4 numbers, got {list(self.bbox)}")
            x1_min, x1_max, x2_min, x2_max = map(float, self.bbox)
            if not (x1_min < x1_max and x2_min < x2_max):
                raise InvalidArgument(f"grid.bbox must satisfy min < max per axis")
        if not self.margin >= 0:
            raise InvalidArgument(f"grid.margin must be non-negative, got {self.margin}")

    @classmethod
    def from_mapping(cls, raw) -> "GridConfig":
        raw = _mapping(raw, "grid")
        fields = _take(raw, "grid", resolution=50, bbox=None, margin=0.5)
        bbox = fields["bbox"]
        return cls(resolution=int(fields["resolution"]),
                   bbox=None if bbox is None else tuple(float(v) for v in bbox),
                   margin=float(fields["margin"]))

    def to_mapping(self) -> dict:
        return {"resolution": int(self.resolution),
                "bbox": None if self.bbox is None else [float(v) for v in self.bbox],
                "margin": float(self.margin)}


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    seed: int = 0
    output_dir: str = "safe-regions-out"

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        raw = _mapping(raw, "config")
        fields = _take(raw, "config", data=None, classifier=None, risk=None,
                       grid=None, seed=0, output_dir="safe-regions-out")
        return cls(data=DataConfig.from_mapping(fields["data"]),
                   classifier=ClassifierConfig.from_mapping(fields["classifier"]),
                   risk=RiskConfig.from_mapping(fields["risk"]),
                   grid=GridConfig.from_mapping(fields["grid"]),
                   seed=int(fields["seed"]),
                   output_dir=str(fields["output_dir"]))

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise InvalidArgument(f"config file not found: {path}")
        loaded = yaml.safe_load(path.read_text())
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise InvalidArgument(f"{path} must contain a YAML mapping at top level")
        return cls.from_mapping(loaded)

    def to_mapping(self) -> dict:
        return {
            "data": self.data.to_mapping(),
            "classifier": self.classifier.to_mapping(),
            "risk": self.risk.to_mapping(),
            "grid": self.grid.to_mapping(),
            "seed": int(self.seed),
            "output_dir": str(self.output_dir),
        }

    def with_overrides(self, seed: int | None = None,
                       output_dir: str | None = None) -> "ExperimentConfig":
        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if output_dir is not None:
            out = replace(out, output_dir=str(output_dir))
        return out


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_yaml(path)
