"""Experiment configuration files (YAML) with strict key checking."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from gess.engine import EngineConfig, InitSpec
from gess.exceptions import ConfigError
from gess.runners import SAMPLERS, BaselineParams
from gess.targets import TARGET_NAMES


@dataclass
class TargetSpec:
    name: str = "funnel"
    dim: int | None = None
    seed: int = 0
    dataset: str | None = None
    label_column: int | str = -1
    prior_var: float = 100.0


@dataclass
class SamplerSpec:
    name: str = "gess"
    params: dict = field(default_factory=dict)


@dataclass
class ScalingSpec:
    triples: list = field(default_factory=list)
    time_budget: float = 120.0
    trials: int = 5
    thin: int = 1


@dataclass
class ExperimentConfig:
    target: TargetSpec = field(default_factory=TargetSpec)
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    chains: int = 100
    burn_in: int = 1000
    samples: int = 1000
    thin: int = 1
    reuse_rounds: int = 100
    seed: int = 0
    worker_count: int = 1
    block_size: int = 32
    init: dict = field(default_factory=lambda: {"center": 0.0, "scale": 1.0})
    output: str = "runs/out"
    scaling: ScalingSpec = field(default_factory=ScalingSpec)

    def validate(self):
        if self.target.name not in TARGET_NAMES:
            raise ConfigError(f"unknown target {self.target.name!r}; choose from {TARGET_NAMES}")
        if self.sampler.name not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler.name!r}; choose from {SAMPLERS}")
        for name in ("chains", "thin", "reuse_rounds", "worker_count", "block_size"):
            val = getattr(self, name)
            if not isinstance(val, int) or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val!r}")
        for name in ("burn_in", "samples"):
            val = getattr(self, name)
            if not isinstance(val, int) or val < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {val!r}")
        if self.sampler.name == "gess" and (self.chains < 2 or self.chains % 2):
            raise ConfigError("gess needs an even number of chains (two equal groups)")
        unknown = set(self.sampler.params) - {f.name for f in dataclasses.fields(BaselineParams)}
        if unknown:
            raise ConfigError(f"unknown sampler params: {sorted(unknown)}")
        unknown = set(self.init) - {"center", "scale"}
        if unknown:
            raise ConfigError(f"unknown init keys: {sorted(unknown)}")
        for t in self.scaling.triples:
            if len(t) != 3 or not all(isinstance(v, int) and v > 0 for v in t):
                raise ConfigError(f"scaling triples must be [D, C, K] positive ints, got {t!r}")
        return self

    def engine_config(self) -> EngineConfig:
        per_group = self.chains // 2 if self.sampler.name == "gess" else self.chains
        return EngineConfig(
            n_chains_per_group=per_group,
            reuse_rounds=self.reuse_rounds,
            burn_in=self.burn_in,
            n_samples=self.samples,
            seed=self.seed,
            worker_count=self.worker_count,
            thin=self.thin,
            block_size=self.block_size,
        )

    def init_spec(self) -> InitSpec:
        return InitSpec(**self.init)

    def baseline_params(self) -> BaselineParams:
        return BaselineParams(**self.sampler.params)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    nested = {"target": TargetSpec, "sampler": SamplerSpec, "scaling": ScalingSpec}
    for key, val in data.items():
        if cls is ExperimentConfig and key in nested:
            val = _build(nested[key], val, f"{where}.{key}")
        kwargs[key] = val
    return cls(**kwargs)


def config_from_dict(data) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "config").validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML: {err}") from err
    return config_from_dict(data or {})


def dump_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False), encoding="utf-8")
