"""Declarative run configuration: a JSON document with strict key checking.

Command-line flags override file values. Every default is visible in the
dataclass definitions below and in ``tweetinform train --help``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .encoder import EncoderConfig, parse_strategy
from .trainer import PhasePlan, TrainPlan


@dataclass
class ModelSettings:
    kind: str = "single"  # "single" or "global_local"
    strategy: str = "last"
    global_strategy: str = "last"
    head_strategy: str = "last"
    tail_strategy: str = "last"
    head_fraction: float = 0.5
    clf_depth: int = 2
    clf_hidden: int | None = None
    n_layers: int = 4
    d_model: int = 64
    n_heads: int = 4
    ffn_dim: int = 256
    max_len: int = 256
    dropout: float = 0.1


@dataclass
class TrainSettings:
    phase1_lr: float = 5e-4
    phase1_epochs: int = 12
    phase2_lr: float = 4e-5
    phase2_epochs: int = 6
    batch_size: int = 16
    weight_decay: float = 0.01


@dataclass
class RunConfig:
    seed: int = 0
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainSettings = field(default_factory=TrainSettings)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "RunConfig":
        return _build(cls, raw, prefix="")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValueError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(raw)

    def to_train_plan(self) -> TrainPlan:
        t = self.train
        return TrainPlan(
            phase1=PhasePlan(t.phase1_lr, t.phase1_epochs),
            phase2=PhasePlan(t.phase2_lr, t.phase2_epochs),
            batch_size=t.batch_size,
            seed=self.seed,
            weight_decay=t.weight_decay,
        )

    def to_encoder_config(self, vocab_size: int) -> EncoderConfig:
        m = self.model
        return EncoderConfig(
            vocab_size=vocab_size,
            n_layers=m.n_layers,
            d_model=m.d_model,
            n_heads=m.n_heads,
            ffn_dim=m.ffn_dim,
            max_len=m.max_len,
            dropout=m.dropout,
        )

    def validate(self) -> None:
        if self.model.kind not in ("single", "global_local"):
            raise ValueError(f"model.kind must be 'single' or 'global_local', got {self.model.kind!r}")
        n_layers = self.model.n_layers
        if self.model.kind == "single":
            parse_strategy(self.model.strategy, n_layers)
        else:
            for name in ("global_strategy", "head_strategy", "tail_strategy"):
                parse_strategy(getattr(self.model, name), n_layers)


def _build(cls, raw: dict[str, Any], prefix: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in fields:
            dotted = f"{prefix}{key}"
            raise ValueError(f"unknown config key: {dotted}")
        target = fields[key].type
        if key == "model":
            kwargs[key] = _build(ModelSettings, _as_dict(value, f"{prefix}{key}"), f"{prefix}{key}.")
        elif key == "train":
            kwargs[key] = _build(TrainSettings, _as_dict(value, f"{prefix}{key}"), f"{prefix}{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _as_dict(value: Any, where: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ValueError(f"config section {where} must be an object")
    return value
