"""Run configuration: packaged TOML defaults, an optional user file, and --set overrides."""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .delay import ClassBoundaries, DelayModelConfig
from .ml.forest import HyperParams, table1_estimators
from .pipeline import EnergyConfig, SimPolicy
from .workloads import LARGE_TEST_SIZE, GenSpec


class ConfigError(ValueError):
    pass


def default_document() -> dict:
    text = resources.files("mldfs").joinpath("default_config.toml").read_text()
    return tomllib.loads(text)


def _merge(base: dict, extra: dict, where: str = "") -> None:
    for k, v in extra.items():
        if k not in base:
            raise ConfigError(f"unknown config key {where}{k}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k} must be a table")
            _merge(base[k], v, f"{where}{k}.")
        else:
            base[k] = v


def parse_override(item: str) -> tuple[list[str], object]:
    """``section.key=value``; the value is read as TOML, bare words as strings."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key.strip().split("."), value


def apply_overrides(doc: dict, overrides) -> None:
    for item in overrides or ():
        path, value = parse_override(item)
        node = doc
        for p in path[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown config section {'.'.join(path[:-1])}")
            node = node[p]
        if path[-1] not in node or isinstance(node[path[-1]], dict):
            raise ConfigError(f"unknown config key {'.'.join(path)}")
        node[path[-1]] = value


@dataclass
class RunConfig:
    doc: dict

    @classmethod
    def load(cls, path=None, overrides=None) -> "RunConfig":
        doc = default_document()
        if path is not None:
            try:
                user = tomllib.loads(Path(path).read_text())
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{path}: {e}") from None
            _merge(doc, user)
        apply_overrides(doc, overrides)
        cfg = cls(doc)
        cfg.validate()
        return cfg

    def copy(self) -> "RunConfig":
        return RunConfig(copy.deepcopy(self.doc))

    def validate(self) -> None:
        try:
            dc = self.delay
            for c in self.classes:
                b = self.bounds(c)
                if abs(b.t_wc - dc.t_wc) > 1e-12:
                    raise ConfigError(f"boundaries.c{c}: last upper must equal t_wc={dc.t_wc}")
            self.hyper(self.classes[0])
            self.energy(0.0)
            self.policy("baseline")
            self.gen_spec(self.classes[0])
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(str(e)) from None

    @property
    def delay(self) -> DelayModelConfig:
        return DelayModelConfig(**self.doc["delay"])

    @property
    def classes(self) -> list[int]:
        cs = [int(c) for c in self.doc["boundaries"]["classes"]]
        if not cs:
            raise ConfigError("boundaries.classes is empty")
        return cs

    def bounds(self, n_classes: int) -> ClassBoundaries:
        key = f"c{n_classes}"
        if key not in self.doc["boundaries"]:
            raise ConfigError(f"no boundaries.{key} entry for a {n_classes}-class experiment")
        b = ClassBoundaries.parse(str(self.doc["boundaries"][key]))
        if b.n_classes != n_classes:
            raise ConfigError(f"boundaries.{key} has {b.n_classes} classes")
        return b

    def hyper(self, n_classes: int, n_estimators: int | None = None) -> HyperParams:
        h = dict(self.doc["hyper"])
        if n_estimators is None:
            n_estimators = h["n_estimators"] or table1_estimators(n_classes)
        h["n_estimators"] = n_estimators
        h["feature_subsample"] = h["feature_subsample"] or None
        h["seed"] = self.doc["seeds"]["model"]
        return HyperParams(**h)

    def energy(self, e_ml: float) -> EnergyConfig:
        e = dict(self.doc["energy"])
        if e["e_ml"] < 0:
            e["e_ml"] = e_ml
        return EnergyConfig(**e)

    def policy(self, mode: str, ml_stages: int = 1) -> SimPolicy:
        s = self.doc["sim"]
        return SimPolicy(mode, replay_cycles=s["replay_cycles"], ml_stages=ml_stages,
                         conservative_deps=s["conservative_deps"])

    def gen_spec(self, n_classes: int, test: bool = False) -> GenSpec:
        w, seeds = self.doc["workload"], self.doc["seeds"]
        return GenSpec(n_per_class=w["test_per_class"] if test else w["n_per_class"],
                       n_classes=n_classes,
                       seed=seeds["test"] if test else seeds["train"],
                       max_attempts_per_sample=w["max_attempts_per_sample"],
                       targeted_fraction=w["targeted_fraction"])

    @property
    def test_size(self) -> int:
        w = self.doc["workload"]
        return LARGE_TEST_SIZE if w["large_test"] else int(w["test_size"])

    def __getitem__(self, section: str) -> dict:
        return self.doc[section]
