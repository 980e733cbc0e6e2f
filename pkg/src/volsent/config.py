"""Run configuration loaded from a TOML document.

Every key is validated before any stage runs: unknown sections or keys, a
missing price path, or an ambiguous split are rejected with ConfigError.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cnn_sentiment import CnnConfig
from .errors import ConfigError, MissingInput
from .lstm import LstmConfig
from .marketdata import SplitSpec
from .word2vec import W2vConfig


@dataclass
class PathsConfig:
    prices: Path
    out: Path
    headlines: Path | None = None
    stopwords: Path | None = None


@dataclass
class ModelToggles:
    garch: bool = True
    svr: bool = True
    lstm: bool = True
    lstm_sentiment: bool = True
    lstm_sentiment_shifted: bool = True

    @property
    def needs_sentiment(self) -> bool:
        return self.lstm_sentiment or self.lstm_sentiment_shifted


@dataclass
class GarchSettings:
    p: int = 1
    q: int = 1
    maxiter: int = 500
    lr_level: float | None = 0.05   # 0 disables the constant-variance fallback


@dataclass
class SvrSettings:
    c: float = 2.0
    gamma: float = 0.001
    epsilon: float = 0.001
    lags: int = 1
    grid_search: bool = False
    c_grid: list = field(default_factory=lambda: [0.5, 2.0, 8.0])
    gamma_grid: list = field(default_factory=lambda: [0.001, 0.1, 1.0])
    epsilon_grid: list = field(default_factory=lambda: [0.001])
    folds: int = 20


@dataclass
class TextSettings:
    max_len: int = 16
    min_count: int = 2


@dataclass
class LogisticSettings:
    lr: float = 1.0
    epochs: int = 200


@dataclass
class RunConfig:
    paths: PathsConfig
    split: SplitSpec
    seed: int = 0
    models: ModelToggles = field(default_factory=ModelToggles)
    garch: GarchSettings = field(default_factory=GarchSettings)
    svr: SvrSettings = field(default_factory=SvrSettings)
    text: TextSettings = field(default_factory=TextSettings)
    word2vec: W2vConfig = field(default_factory=W2vConfig)
    cnn: CnnConfig = field(default_factory=CnnConfig)
    logistic: LogisticSettings = field(default_factory=LogisticSettings)
    lstm: LstmConfig = field(default_factory=LstmConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(
            self, seed=seed,
            word2vec=dataclasses.replace(self.word2vec, seed=seed),
            cnn=dataclasses.replace(self.cnn, seed=seed),
            lstm=dataclasses.replace(self.lstm, seed=seed),
        )


_SECTIONS = {
    "models": ModelToggles, "garch": GarchSettings, "svr": SvrSettings, "text": TextSettings,
    "word2vec": W2vConfig, "cnn": CnnConfig, "logistic": LogisticSettings, "lstm": LstmConfig,
}


def _build(cls, section: str, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a table")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _path(value, base: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(data: dict, base_dir: Path, seed: int | None = None, out: Path | None = None,
                 check_files: bool = True) -> RunConfig:
    allowed = {"seed", "paths", "split"} | set(_SECTIONS)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")

    paths = data.get("paths")
    if not isinstance(paths, dict) or "prices" not in paths:
        raise ConfigError("[paths] prices is required")
    extra = sorted(set(paths) - {"prices", "headlines", "stopwords", "out"})
    if extra:
        raise ConfigError(f"unknown key(s) in [paths]: {', '.join(extra)}")
    out_dir = out if out is not None else paths.get("out")
    if out_dir is None:
        raise ConfigError("an output directory is required ([paths] out or --out)")
    pc = PathsConfig(
        prices=_path(paths["prices"], base_dir),
        out=_path(out_dir, base_dir) if out is None else Path(out_dir),
        headlines=_path(paths["headlines"], base_dir) if paths.get("headlines") else None,
        stopwords=_path(paths["stopwords"], base_dir) if paths.get("stopwords") else None,
    )

    split = data.get("split")
    if not isinstance(split, dict):
        raise ConfigError("[split] is required")
    extra = sorted(set(split) - {"boundary_date", "train_fraction"})
    if extra:
        raise ConfigError(f"unknown key(s) in [split]: {', '.join(extra)}")
    bd = split.get("boundary_date")
    if isinstance(bd, str):
        try:
            bd = dt.date.fromisoformat(bd)
        except ValueError as exc:
            raise ConfigError(f"[split] boundary_date: {exc}") from None
    try:
        spec = SplitSpec(boundary_date=bd, train_fraction=split.get("train_fraction"))
        if spec.train_fraction is not None and spec.train_fraction >= 1:
            raise ValueError("train_fraction must be < 1")
    except ValueError as exc:
        raise ConfigError(f"[split]: {exc}") from None

    kwargs = {name: _build(cls, name, data.get(name, {})) for name, cls in _SECTIONS.items()}
    cfg = RunConfig(paths=pc, split=spec, **kwargs)
    cfg = cfg.with_seed(int(data.get("seed", 0)) if seed is None else int(seed))

    if kwargs["cnn"].embed_dim != kwargs["word2vec"].dim:
        raise ConfigError("[cnn] embed_dim must equal [word2vec] dim")
    if kwargs["cnn"].max_len != kwargs["text"].max_len:
        raise ConfigError("[cnn] max_len must equal [text] max_len")
    if cfg.models.needs_sentiment and pc.headlines is None:
        raise ConfigError("sentiment models are enabled but no [paths] headlines file is configured")
    if check_files:
        for label, p in (("prices", pc.prices), ("headlines", pc.headlines), ("stopwords", pc.stopwords)):
            if p is not None and not p.is_file():
                raise MissingInput(f"{label} file not found: {p}")
    return cfg


def load_config(path, seed: int | None = None, out: Path | None = None, check_files: bool = True) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent, seed=seed, out=out, check_files=check_files)
