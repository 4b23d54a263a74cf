"""Run configuration: one flat set of keys shared by config files and CLI flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .mser import MserParams
from .ventricle import GaParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # denoising
    diffusion: bool = True
    diffusion_iterations: int = 15
    diffusion_lambda: float = 1 / 7
    diffusion_kappa: float = 3.0
    diffusion_conduction: str = "rational"
    # MSER
    mser_delta: int = 5
    mser_min_area_frac: float = 0.001
    mser_max_area_frac: float = 0.25
    mser_max_variation: float = 0.5
    # GA
    ga_population: int = 50
    ga_generations: int = 100
    ga_crossover_rate: float = 0.8
    ga_mutation_rate: float = 0.0   # 0 means 1 / bit length
    ga_elitism: int = 2
    seed: int = 42
    # coarse detection
    z_threshold: float = 0.0
    dist_min: float = 0.15
    size_constraint: bool = True
    distance_constraint: bool = True
    min_lesion_size: int = 0        # 0 disables the rule
    top_fraction: float = 0.05
    # fine detection
    dth: float = 0.1
    n_adjacent: int = 1
    # execution / output
    threads: int = 1
    out: str = "wmi_out"
    overlays: bool = False

    def mser_params(self) -> MserParams:
        return MserParams(
            delta=self.mser_delta,
            max_variation=self.mser_max_variation,
            min_area_frac=self.mser_min_area_frac,
            max_area_frac=self.mser_max_area_frac,
        )

    def ga_params(self, slice_index: int = 0) -> GaParams:
        return GaParams(
            population=self.ga_population,
            generations=self.ga_generations,
            crossover_rate=self.ga_crossover_rate,
            mutation_rate=self.ga_mutation_rate or None,
            elitism=self.ga_elitism,
            rng_seed=(self.seed, slice_index),
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def field_types() -> dict[str, type]:
    return {f.name: type(f.default) for f in fields(RunConfig)}


def coerce(key: str, raw: str):
    types = field_types()
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    kind = types[key]
    text = raw.strip()
    if kind is bool:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = coerce(key, raw)
    return values


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the file's keys, then explicit overrides (flags win)."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config_text(text))
    unknown = set(overrides) - set(field_types())
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.dth <= 0:
        raise ConfigError("dth must be > 0")
    if cfg.n_adjacent < 1:
        raise ConfigError("n_adjacent must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if not 0 < cfg.diffusion_lambda <= 0.25:
        raise ConfigError("diffusion_lambda must be in (0, 1/4]")
    if cfg.diffusion_conduction not in ("rational", "exp"):
        raise ConfigError("diffusion_conduction must be 'rational' or 'exp'")
    if cfg.min_lesion_size < 0:
        raise ConfigError("min_lesion_size must be >= 0")
    try:
        cfg.ga_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
