# config.py - experiment configuration: YAML file + .env / environment overrides

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from dotenv import load_dotenv

from errors import ConfigError
from models.measures import SpectralMeasure, Spectrum, TruncationBudget
from services.spectral_measures import measure_from_dict, spectrum_from_dict

ALL_CHECKS = [
    "spectrum_display",
    "parseval",
    "parseval_monotone",
    "orthonormality",
    "lipschitz",
    "derivative_quotient",
    "unit_variance",
    "stationarity",
    "vage",
    "qsigma_norm",
    "wick_ito",
    "ito_polynomial",
    "ito_mc",
    "bridge_shape",
    "ou_decay",
    "mc_covariance",
]


@dataclass
class GridConfig:
    t_min: float = 0.0
    t_max: float = 1.0
    points: int = 101

    def times(self) -> np.ndarray:
        if self.points < 1 or self.t_max < self.t_min:
            raise ConfigError("grid needs points >= 1 and t_max >= t_min")
        return np.linspace(self.t_min, self.t_max, self.points)


@dataclass
class CharfunConfig:
    t_min: float = -10.0
    t_max: float = 10.0
    points: int = 201


@dataclass
class EnsembleConfig:
    M: int = 10_000
    seed: int = 20240601


@dataclass
class VerifyConfig:
    checks: List[str] = field(default_factory=lambda: list(ALL_CHECKS))
    seed: int = 7
    random_points: int = 100
    deficit_tol: float = 5e-3
    orthonormality_count: int = 16
    orthonormality_tol: float = 1e-9
    qsigma_N: int = 4096
    qsigma_reference_N: int = 256
    qsigma_battery: int = 10
    qsigma_tol: float = 1e-6
    wick_N: int = 32
    wick_tol: float = 1e-6
    ito_N: int = 16
    ito_tol: float = 1e-5
    z_max: float = 4.0
    covariance_pairs: int = 10
    bridge_n_max: int = 10_000
    bridge_tol: float = 1e-3
    ou_theta: float = 1.0
    ou_alpha: float = 1.0


@dataclass
class ExperimentConfig:
    measure: Dict[str, Any] = field(default_factory=lambda: {"kind": "aifs", "m": 2})
    spectrum: Dict[str, Any] = field(default_factory=lambda: {"m": 2, "N": 128})
    budget: TruncationBudget = field(default_factory=TruncationBudget)
    grid: GridConfig = field(default_factory=GridConfig)
    charfun: CharfunConfig = field(default_factory=CharfunConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output_dir: str = "out"
    threads: int = 1

    def build_measure(self) -> SpectralMeasure:
        return measure_from_dict(self.measure)

    def build_spectrum(self) -> Spectrum:
        return spectrum_from_dict(self.spectrum)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_SECTIONS = {
    "budget": TruncationBudget,
    "grid": GridConfig,
    "charfun": CharfunConfig,
    "ensemble": EnsembleConfig,
    "verify": VerifyConfig,
}


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {', '.join(unknown)}")
    values = {}
    for key, value in data.items():
        default = getattr(cls(), key)
        try:
            if isinstance(default, bool) or isinstance(default, list):
                values[key] = value
            elif isinstance(default, int):
                values[key] = int(value)
            elif isinstance(default, float):
                values[key] = float(value)
            else:
                values[key] = value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}.{key}: {value!r}") from exc
    try:
        return cls(**values)
    except (ConfigError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


def config_from_dict(data: Optional[Dict[str, Any]]) -> ExperimentConfig:
    data = dict(data or {})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}")
    cfg = ExperimentConfig()
    kwargs: Dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _section(cls, data[name], name)
    for name in ("measure", "spectrum"):
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"section '{name}' must be a mapping")
            kwargs[name] = dict(data[name])
    if "output_dir" in data:
        kwargs["output_dir"] = str(data["output_dir"])
    if "threads" in data:
        try:
            kwargs["threads"] = int(data["threads"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for threads: {data['threads']!r}") from exc
    cfg = replace(cfg, **kwargs)
    bad = [c for c in cfg.verify.checks if c not in ALL_CHECKS]
    if bad:
        raise ConfigError(f"unknown verification checks: {', '.join(bad)}")
    # build once so bad measure/spectrum specs fail at load time
    try:
        cfg.build_measure()
        cfg.build_spectrum()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid measure or spectrum section: {exc}") from exc
    return cfg


def _env_overrides(cfg: ExperimentConfig) -> ExperimentConfig:
    out_dir = os.getenv("SPECTRAL_OUT_DIR")
    seed = os.getenv("SPECTRAL_SEED")
    threads = os.getenv("SPECTRAL_THREADS")
    try:
        if out_dir:
            cfg = replace(cfg, output_dir=out_dir)
        if seed:
            cfg = replace(cfg, ensemble=replace(cfg.ensemble, seed=int(seed)))
        if threads:
            cfg = replace(cfg, threads=int(threads))
    except ValueError as exc:
        raise ConfigError(f"bad environment override: {exc}") from exc
    return cfg


def load_config(path: Optional[str | Path] = None, env_file: Optional[str | Path] = ".env") -> ExperimentConfig:
    """Defaults, then the YAML file, then SPECTRAL_* variables (a .env file fills unset ones)."""
    if env_file is not None and Path(env_file).exists():
        load_dotenv(env_file, override=False)
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config '{path}': {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config '{path}' is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config '{path}' must be a mapping at top level")
    return _env_overrides(config_from_dict(data))


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(cfg.to_dict(), f, sort_keys=False)
