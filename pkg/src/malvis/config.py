"""Pipeline configuration: one YAML file holding every stage's settings."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .cgan import CganConfig
from .cnn import CnnConfig
from .smote import SmoteConfig
from .synth import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass
class PathsConfig:
    dataset: str = "data/dataset.csv"
    train: str = "data/train.csv"
    test: str = "data/test.csv"
    smote: str = "data/train_smote.csv"
    images: str = "images"
    cnn_a: str = "models/cnn_a.npz"
    cnn_b: str = "models/cnn_b.npz"
    generator: str = "models/generator.npz"
    reports: str = "reports"

    def check(self):
        vals = list(asdict(self).values())
        if len(set(vals)) != len(vals):
            raise ConfigError("artifact paths must be distinct")


@dataclass
class PipelineConfig:
    seed: int = 0
    test_per_class: int = 228
    # generated malign images for arm B; None means "enough to balance the training set"
    n_generated: int | None = None
    cv: bool = False
    synth: SynthConfig = field(default_factory=lambda: SynthConfig(n_benign=3228, n_malign=1693))
    smote: SmoteConfig = field(default_factory=SmoteConfig)
    cnn: CnnConfig = field(default_factory=lambda: CnnConfig(epochs=10))
    cgan: CganConfig = field(default_factory=CganConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        if self.test_per_class < 0:
            raise ConfigError("test_per_class must be non-negative")
        if self.n_generated is not None and self.n_generated < 0:
            raise ConfigError("n_generated must be non-negative")
        self.paths.check()

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("d_widths", "g_widths"):
            d["cgan"][key] = list(d["cgan"][key])
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def stage_seeds(self) -> dict[str, int]:
        """Per-stage seeds derived from the master seed."""
        names = ("synth", "split", "smote", "cnn", "cgan", "generate")
        return {n: self.seed * 1000 + i for i, n in enumerate(names)}

    def seeded(self) -> "PipelineConfig":
        s = self.stage_seeds()
        return replace(self,
                       synth=replace(self.synth, rng_seed=s["synth"]),
                       smote=replace(self.smote, rng_seed=s["smote"]),
                       cnn=replace(self.cnn, rng_seed=s["cnn"]),
                       cgan=replace(self.cgan, rng_seed=s["cgan"]))


_SECTIONS = {"synth": SynthConfig, "smote": SmoteConfig, "cnn": CnnConfig, "cgan": CganConfig,
             "paths": PathsConfig}


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    for f in fields(cls):
        # YAML 1.1 leaves "2e-4" as a string
        if isinstance(data.get(f.name), str) and "float" in str(f.type):
            try:
                data[f.name] = float(data[f.name])
            except ValueError as exc:
                raise ConfigError(f"{where}.{f.name}: not a number") from exc
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict | None) -> PipelineConfig:
    data = dict(data or {})
    defaults = PipelineConfig()
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = data.pop(name, None) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section {name} must be a mapping")
        base = asdict(getattr(defaults, name))
        base.update(section)
        kwargs[name] = _build(cls, base, name)
    return _build(PipelineConfig, {**data, **kwargs}, "top level")


def load_config(path: str | os.PathLike | None, overrides: dict | None = None) -> PipelineConfig:
    """Read a YAML file (or defaults when ``path`` is None) and apply dotted-key overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    for key, value in (overrides or {}).items():
        node = data
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_dict(data)


def dump_config(config: PipelineConfig, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)
