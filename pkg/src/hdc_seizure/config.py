"""Experiment configuration: sectioned key=value files with full validation.

Unknown sections or keys are usage errors so typos cannot silently fall
back to defaults. Every stage writes the resolved configuration into its
output manifest.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields

from .learning import STRATEGIES

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration file or override: a usage error."""


@dataclass
class ExperimentConfig:
    # experiment
    name: str = "experiment"
    seed: int = 0
    strategies: tuple = STRATEGIES
    # data
    data_root: str = ""
    out: str = ""
    ratio: float = 10.0
    pre_excl_sec: float = 60.0
    post_excl_sec: float = 900.0
    # features
    window_sec: float = 4.0
    step_sec: float = 0.5
    registry: str = "default"
    # encoder
    dim: int = 10000
    num_levels: int = 20
    encode_mode: str = "two_stage"
    # learning
    learning_rate: float = 1.0
    epsilon: float = 0.003
    patience: int = 3
    max_passes: int = 30
    keep_fraction: float | None = None
    min_members: float = 2.0
    min_members_fraction: float = 0.02
    # postprocess
    smooth_sec: float = 5.0
    merge_gap_sec: float = 30.0
    # synth
    synth_subjects: int = 6
    synth_duration_sec: float = 1200.0
    synth_fs: float = 96.0
    synth_channels: int = 4
    synth_seizures: int = 4
    synth_seizure_duration_sec: float = 24.0
    synth_mean_dwell_sec: float = 30.0
    synth_background_modes: int = 3
    synth_minority_weight: float = 0.12
    synth_gain_jitter: float = 0.0
    synth_freq_jitter: float = 0.0

    def validate(self) -> None:
        for tag in self.strategies:
            if tag not in STRATEGIES:
                raise ConfigError(
                    f"unknown strategy {tag!r}; valid tags: {', '.join(STRATEGIES)}"
                )
        if not self.strategies:
            raise ConfigError("at least one strategy required")
        if self.registry != "default":
            raise ConfigError(f"unknown feature registry {self.registry!r}; only 'default' exists")
        if self.encode_mode not in ("two_stage", "single_stage"):
            raise ConfigError(f"encode_mode must be two_stage or single_stage, got {self.encode_mode!r}")
        positive = [
            ("ratio", self.ratio), ("window_sec", self.window_sec), ("step_sec", self.step_sec),
            ("dim", self.dim), ("learning_rate", self.learning_rate),
            ("max_passes", self.max_passes), ("patience", self.patience),
            ("synth_subjects", self.synth_subjects), ("synth_duration_sec", self.synth_duration_sec),
            ("synth_fs", self.synth_fs), ("synth_channels", self.synth_channels),
            ("synth_mean_dwell_sec", self.synth_mean_dwell_sec),
            ("synth_background_modes", self.synth_background_modes),
        ]
        for name, value in positive:
            if not (value > 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        non_negative = [
            ("pre_excl_sec", self.pre_excl_sec), ("post_excl_sec", self.post_excl_sec),
            ("epsilon", self.epsilon), ("smooth_sec", self.smooth_sec),
            ("merge_gap_sec", self.merge_gap_sec), ("synth_seizures", self.synth_seizures),
        ]
        for name, value in non_negative:
            if value < 0:
                raise ConfigError(f"{name} must be non-negative, got {value}")
        if self.num_levels < 2:
            raise ConfigError(f"num_levels must be at least 2, got {self.num_levels}")
        if self.keep_fraction is not None and not (0 < self.keep_fraction <= 1):
            raise ConfigError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if not (0 < self.synth_minority_weight < 1):
            raise ConfigError(
                f"synth_minority_weight must be in (0, 1), got {self.synth_minority_weight}"
            )
        if not (0 <= self.synth_gain_jitter < 1):
            raise ConfigError(
                f"synth_gain_jitter must be in [0, 1), got {self.synth_gain_jitter}"
            )
        if not (0 <= self.synth_freq_jitter < 1):
            raise ConfigError(
                f"synth_freq_jitter must be in [0, 1), got {self.synth_freq_jitter}"
            )

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _strategies_value(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _optional_float(text: str):
    return None if text.strip() == "" else float(text)


# (section, key) -> (config attribute, parser)
_SCHEMA = {
    ("experiment", "name"): ("name", str.strip),
    ("experiment", "seed"): ("seed", int),
    ("experiment", "strategies"): ("strategies", _strategies_value),
    ("data", "root"): ("data_root", str.strip),
    ("data", "out"): ("out", str.strip),
    ("data", "ratio"): ("ratio", float),
    ("data", "pre_excl_sec"): ("pre_excl_sec", float),
    ("data", "post_excl_sec"): ("post_excl_sec", float),
    ("features", "window_sec"): ("window_sec", float),
    ("features", "step_sec"): ("step_sec", float),
    ("features", "registry"): ("registry", str.strip),
    ("encoder", "dim"): ("dim", int),
    ("encoder", "num_levels"): ("num_levels", int),
    ("encoder", "mode"): ("encode_mode", str.strip),
    ("learning", "learning_rate"): ("learning_rate", float),
    ("learning", "epsilon"): ("epsilon", float),
    ("learning", "patience"): ("patience", int),
    ("learning", "max_passes"): ("max_passes", int),
    ("learning", "keep_fraction"): ("keep_fraction", _optional_float),
    ("learning", "min_members"): ("min_members", float),
    ("learning", "min_members_fraction"): ("min_members_fraction", float),
    ("postprocess", "smooth_sec"): ("smooth_sec", float),
    ("postprocess", "merge_gap_sec"): ("merge_gap_sec", float),
    ("synth", "subjects"): ("synth_subjects", int),
    ("synth", "duration_sec"): ("synth_duration_sec", float),
    ("synth", "fs"): ("synth_fs", float),
    ("synth", "channels"): ("synth_channels", int),
    ("synth", "seizures"): ("synth_seizures", int),
    ("synth", "seizure_duration_sec"): ("synth_seizure_duration_sec", float),
    ("synth", "mean_dwell_sec"): ("synth_mean_dwell_sec", float),
    ("synth", "background_modes"): ("synth_background_modes", int),
    ("synth", "minority_weight"): ("synth_minority_weight", float),
    ("synth", "gain_jitter"): ("synth_gain_jitter", float),
    ("synth", "freq_jitter"): ("synth_freq_jitter", float),
}

_SECTIONS = sorted({s for s, _ in _SCHEMA})


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}")
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"{path}: unknown section [{section}]; valid sections: {', '.join(_SECTIONS)}"
            )
        for key, raw in parser.items(section):
            target = _SCHEMA.get((section, key))
            if target is None:
                valid = ", ".join(k for (s, k) in _SCHEMA if s == section)
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]; valid keys: {valid}")
            attr, parse = target
            try:
                setattr(cfg, attr, parse(raw))
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}")
    cfg.validate()
    return cfg
