"""Run configuration: every pipeline tunable in one plain-text key=value file.

The file key ``lambda`` maps to the attribute ``size_loss_weight`` (the word
is reserved in Python).  Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError

RAY_CHECKS = ("one", "both")
SIZE_AGGREGATIONS = ("co_voting", "post_hoc")
LOSS_VARIANTS = ("one_minus_cos_sq", "cos_sq", "neg_cos_sq")

# file key -> attribute name, where they differ
_KEY_TO_ATTR = {"lambda": "size_loss_weight"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass(frozen=True)
class RunConfig:
    # sampling
    strata_divisor: int = 50
    pair_distance_fraction: float = 0.25
    pair_count: int = 10000
    sample_seed: int = 0
    pair_seed: int = 1
    # voting
    ray_check: str = "both"
    size_aggregation: str = "co_voting"
    nms_cells: int = 3
    min_score_fraction: float = 0.05
    absolute_size: bool = False
    # model and training
    hidden: int = 128
    blocks: int = 20
    loss_variant: str = "one_minus_cos_sq"
    size_loss_weight: float = 1.0
    learning_rate: float = 3e-4
    weight_decay: float = 1e-4
    epochs: int = 50
    frames_per_batch: int = 4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    train_seed: int = 0

    def __post_init__(self) -> None:
        positive = (
            "strata_divisor", "pair_distance_fraction", "pair_count",
            "hidden", "blocks", "learning_rate",
            "epochs", "frames_per_batch", "adam_eps", "nms_cells",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{_ATTR_TO_KEY.get(name, name)} must be positive")
        for name in ("size_loss_weight", "weight_decay", "min_score_fraction"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{_ATTR_TO_KEY.get(name, name)} must be >= 0")
        if not 0.0 < self.pair_distance_fraction <= 1.0:
            raise ConfigError("pair_distance_fraction must be in (0, 1]")
        for name, allowed in (
            ("ray_check", RAY_CHECKS),
            ("size_aggregation", SIZE_AGGREGATIONS),
            ("loss_variant", LOSS_VARIANTS),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(
                    f"{name} must be one of {', '.join(allowed)}, got {getattr(self, name)!r}"
                )
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must be in [0, 1)")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(attr: str, raw: str):
    kind = _FIELDS[attr].type
    key = _ATTR_TO_KEY.get(attr, attr)
    if kind == "bool":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"{key} expects true or false, got {raw!r}")
        return low == "true"
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {raw!r}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines; blank lines and '#' comments are ignored."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        attr = _KEY_TO_ATTR.get(key, key)
        if attr not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if attr in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[attr] = _convert(attr, raw)
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{_ATTR_TO_KEY.get(f.name, f.name)}={value}")
    return "\n".join(lines) + "\n"


def read_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def write_config(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
