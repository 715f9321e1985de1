"""Experiment configuration files (TOML or JSON) and their validation.

A file has top-level ``command``, ``seed``, ``out`` and ``threads`` keys plus
optional tables ``target``, ``train``, ``variance``, ``noise``, ``estimator``,
``noisy`` and ``haar``. The top-level seed is the only seed: it is copied into
every component that draws random numbers. Validation reports every bad field
at once.
"""
from __future__ import annotations

import json
import math
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path
from types import SimpleNamespace

import tomli

from .baseline import VarianceExperimentConfig
from .errors import ConfigError, ParseError
from .noisy import NoiseModel, ShotEstimator
from .sequential import TrainConfig
from .targets import TargetSpec

COMMANDS = ("learn", "learn-global", "variance", "noisy", "rank-seq", "haar-check")
NEEDS_TARGET = ("learn", "learn-global", "noisy", "rank-seq")


@dataclass(frozen=True)
class NoisyOptions:
    restarts: int = 20
    max_evals: int = 400
    initial_step: float = 0.5

    def validate(self) -> list:
        errors = []
        if self.restarts < 1:
            errors.append(("restarts", "must be >= 1"))
        if self.max_evals < 1:
            errors.append(("max_evals", "must be >= 1"))
        if not self.initial_step > 0:
            errors.append(("initial_step", "must be > 0"))
        return errors


@dataclass(frozen=True)
class HaarOptions:
    dims: tuple = (2, 4)
    samples: int = 100_000

    def validate(self) -> list:
        errors = []
        if not self.dims or any(not isinstance(d, int) or d < 2 for d in self.dims):
            errors.append(("dims", "must be a nonempty list of integers >= 2"))
        if self.samples < 2:
            errors.append(("samples", "must be >= 2"))
        return errors


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    out: str = "results"
    threads: int = 1
    target: TargetSpec | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    variance: VarianceExperimentConfig | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    estimator: ShotEstimator = field(default_factory=ShotEstimator)
    noisy: NoisyOptions = field(default_factory=NoisyOptions)
    haar: HaarOptions = field(default_factory=HaarOptions)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "out": self.out,
            "threads": self.threads,
            "target": self.target.to_json() if self.target else None,
            "train": self.train.to_json(),
            "variance": self.variance.to_json() if self.variance else None,
            "noise": self.noise.to_json(),
            "estimator": self.estimator.to_json(),
            "noisy": vars(self.noisy),
            "haar": {"dims": list(self.haar.dims), "samples": self.haar.samples},
        }


SECTIONS = {
    "target": TargetSpec,
    "train": TrainConfig,
    "variance": VarianceExperimentConfig,
    "noise": NoiseModel,
    "estimator": ShotEstimator,
    "noisy": NoisyOptions,
    "haar": HaarOptions,
}
# sections whose seed comes from the top level
SEEDED = ("target", "train", "variance", "estimator")
TUPLE_FIELDS = {"n_values", "steps", "dims"}


def read_config_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}") from exc


def _defaults(cls) -> dict:
    out = {}
    for f in fields(cls):
        if not f.init:
            continue
        if f.default is not MISSING:
            out[f.name] = f.default
        elif f.default_factory is not MISSING:
            out[f.name] = f.default_factory()
    return out


def _type_ok(value, default) -> bool:
    if default is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, (tuple, list)):
        return isinstance(value, (tuple, list))
    if isinstance(default, dict):
        return isinstance(value, dict)
    return True


def _section(name, cls, raw, seed, errors):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        errors.append({"field": name, "message": "must be a table"})
        return None
    defaults = _defaults(cls)
    values = dict(defaults)
    # unknown keys are reported but do not stop the remaining checks
    ok = True
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in defaults and not (name == "target" and key in ("family", "n")):
            errors.append({"field": path, "message": "unknown field"})
            continue
        if key == "seed" and name in SEEDED:
            errors.append({"field": path, "message": "set the top-level seed instead"})
            continue
        if cls is NoiseModel and key in ("t1", "t2") and value is None:
            value = math.inf
        if key in defaults and not _type_ok(value, defaults[key]):
            errors.append({"field": path, "message": f"wrong type {type(value).__name__}"})
            ok = False
            continue
        values[key] = tuple(value) if key in TUPLE_FIELDS else value
    if name == "target":
        for key in ("family", "n"):
            if key not in raw:
                errors.append({"field": f"target.{key}", "message": "required"})
                ok = False
        if "n" in raw and not (isinstance(raw["n"], int) and not isinstance(raw["n"], bool)):
            errors.append({"field": "target.n", "message": "must be an integer"})
            ok = False
    if name in SEEDED:
        values["seed"] = seed
    if not ok:
        return None
    problems = cls.validate(SimpleNamespace(**values)) if hasattr(cls, "validate") else []
    for key, msg in problems:
        errors.append({"field": f"{name}.{key}", "message": msg})
    if problems:
        return None
    return cls(**values)


def parse_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Build and validate an ExperimentConfig; raises ConfigError listing every problem."""
    if not isinstance(raw, dict):
        raise ConfigError([{"field": "<root>", "message": "config must be a table/object"}])
    raw = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    errors = []
    known = {"command", "seed", "out", "threads", *SECTIONS}
    for key in raw:
        if key not in known:
            errors.append({"field": key, "message": "unknown field"})
    command = raw.get("command")
    if command not in COMMANDS:
        errors.append({"field": "command", "message": f"must be one of {', '.join(COMMANDS)}"})
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        errors.append({"field": "seed", "message": "must be an unsigned 64-bit integer"})
        seed = 0
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        errors.append({"field": "threads", "message": "must be an integer >= 1"})
    out = raw.get("out", "results")
    if not isinstance(out, str) or not out:
        errors.append({"field": "out", "message": "must be a nonempty path string"})

    built = {}
    for name, cls in SECTIONS.items():
        if name == "target" and "target" not in raw:
            if command in NEEDS_TARGET:
                errors.append({"field": "target", "message": f"required for command {command!r}"})
            continue
        if name == "variance" and "variance" not in raw and command != "variance":
            continue
        built[name] = _section(name, cls, raw.get(name), seed, errors)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(command=command, seed=seed, out=out, threads=threads, **built)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    return parse_config(read_config_file(path), overrides)
