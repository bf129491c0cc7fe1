"""Run configuration: a flat key = value file plus a few CLI overrides.

Every knob of a run lives in one place so that the manifest can record it
and a rerun from the same file is exactly reproducible. Unknown keys are
rejected rather than ignored — a typo should fail loudly, not silently
train with a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import date
from pathlib import Path

AGENT_KINDS = ("ddpg", "sac", "mpt")


class ConfigError(ValueError):
    pass


class UnknownKeyError(ConfigError):
    def __init__(self, key: str, line: int):
        super().__init__(f"line {line}: unknown config key {key!r}")
        self.key = key


@dataclass
class RunConfig:
    # data
    data_dir: str = "data"
    tickers: tuple[str, ...] = ("BTC", "ETH", "LTC", "DOGE")
    train_end: date = date(2022, 12, 31)
    volume_eps: float = 1.0
    # environment
    cost_rate: float = 0.001
    window: int = 50
    include_cash: bool = True
    reward_kind: str = "log_return"
    dsr_eta: float = 0.01
    initial_value: float = 1.0
    gamma: float = 0.99
    # networks
    hidden: int = 64
    lstm_layers: int = 3
    leaky_slope: float = 0.01
    squash_scale: float = 5.0
    # agent
    agent: str = "sac"
    tau: float = 1e-3
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    value_lr: float = 3e-4
    alpha_lr: float = 1e-3
    initial_alpha: float = 1.0
    batch_size: int = 64
    buffer_capacity: int = 100_000
    episodes: int = 1000
    steps_per_episode: int = 10_000
    ou_mu: float = 0.0
    ou_sigma: float = 0.3
    ou_theta: float = 0.20
    # mean-variance benchmark
    mpt_lookback: int = 60
    mpt_lambda: float = 1.0
    risk_free: float = 0.0
    # forecaster
    forecast_epochs: int = 1000
    forecast_batch_size: int = 128
    forecast_lr: float = 3e-4
    val_fraction: float = 0.1
    # run
    seed: int = 0
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.agent not in AGENT_KINDS:
            raise ConfigError(f"agent must be one of {AGENT_KINDS}, got {self.agent!r}")
        if not self.tickers:
            raise ConfigError("tickers must not be empty")
        if len(set(self.tickers)) != len(self.tickers):
            raise ConfigError("duplicate ticker")

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, date):
                v = v.isoformat()
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str, line: int):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ == "date":
            return date.fromisoformat(raw)
        if typ.startswith("tuple"):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            return tuple(parts)
        return raw  # str
    except ValueError as err:
        raise ConfigError(f"line {line}: bad value for {key!r}: {err}") from None


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value format into a field dict (no defaults applied)."""
    fields: dict = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise UnknownKeyError(key, lineno)
        if key in fields:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = _parse_value(key, value, lineno)
    return fields


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus CLI overrides."""
    fields: dict = {}
    if path is not None:
        fields.update(parse_config_text(Path(path).read_text()))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown override {key!r}")
        fields[key] = value
    return RunConfig(**fields)


def config_schema() -> str:
    """Human-readable schema: every key, its type, and its default."""
    lines = ["# key = default        (type)"]
    defaults = RunConfig()
    for f in dataclasses.fields(RunConfig):
        v = getattr(defaults, f.name)
        if isinstance(v, tuple):
            v = ",".join(v)
        lines.append(f"{f.name} = {v}  ({f.type})")
    return "\n".join(lines)
