"""Versioned run configuration.

One JSON file holds every tunable: distance parameters, labeling
thresholds, featurization settings, network hyper-parameters, evaluation
settings, and the synthetic-generator spec. CLI flags override individual
fields.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .dtw import DtwParams
from .features import FeatureConfig
from .labels import NoiseThresholds
from .net import NetConfig
from .synth import SyntheticSpec

__all__ = ["LabelConfig", "EvalConfig", "RunConfig"]

CONFIG_VERSION = 1


@dataclass(frozen=True)
class LabelConfig:
    t_g: float = 7.0
    t_w: float = 15.0
    negative_ratio: float = 4.0
    seed: int = 0

    def thresholds(self) -> NoiseThresholds:
        return NoiseThresholds(t_g=self.t_g, t_w=self.t_w)


@dataclass(frozen=True)
class EvalConfig:
    n_folds: int = 5
    threshold: float = 10.0
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    dtw: DtwParams = field(default_factory=DtwParams)
    labels: LabelConfig = field(default_factory=LabelConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    net: NetConfig = field(default_factory=NetConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)

    def to_dict(self) -> dict:
        data = {"config_version": CONFIG_VERSION}
        for f in fields(self):
            data[f.name] = asdict(getattr(self, f.name))
        return data

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @staticmethod
    def load(path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        version = data.get("config_version")
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version!r}")
        sections = {
            "dtw": DtwParams,
            "labels": LabelConfig,
            "features": FeatureConfig,
            "net": NetConfig,
            "eval": EvalConfig,
            "synth": SyntheticSpec,
        }
        kwargs = {}
        for name, cls in sections.items():
            section = data.get(name, {})
            if name == "synth" and "families" in section:
                section = dict(section, families=tuple(section["families"]))
            kwargs[name] = cls(**section)
        return RunConfig(**kwargs)

    def override(self, section: str, **changes) -> "RunConfig":
        """A copy with some fields of one section replaced; None values in
        ``changes`` are ignored so unset CLI flags pass through."""
        current = getattr(self, section)
        applied = {k: v for k, v in changes.items() if v is not None}
        if not applied:
            return self
        return replace(self, **{section: replace(current, **applied)})
