"""Run configuration: defaults, config-file parsing, and precedence.

Settings resolve in three layers — built-in defaults, then a key=value
config file, then explicit command-line flags — later layers winning.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ArgumentError, DataError
from .inference import Strategy

FILTER_MODES = ("record-max", "centroid")
INVERSE_WEIGHTINGS = ("reciprocal", "cosine")


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by the inference-side commands."""

    seed: int = 42
    threshold: float = 0.77
    k: int = 100
    strategy: str = "nearest"
    filter_mode: str = "record-max"
    inverse_weighting: str = "reciprocal"

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ArgumentError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not -1.0 <= self.threshold <= 1.0:
            raise ArgumentError(
                f"threshold is a cosine and must lie in [-1, 1], got {self.threshold}"
            )
        if self.k < 1:
            raise ArgumentError(f"k must be positive, got {self.k}")
        Strategy(self.strategy)  # raises ValueError on unknown names
        if self.filter_mode not in FILTER_MODES:
            raise ArgumentError(
                f"filter_mode must be one of {FILTER_MODES}, got {self.filter_mode!r}"
            )
        if self.inverse_weighting not in INVERSE_WEIGHTINGS:
            raise ArgumentError(
                f"inverse_weighting must be one of {INVERSE_WEIGHTINGS},"
                f" got {self.inverse_weighting!r}"
            )


_FIELD_PARSERS = {
    "seed": int,
    "threshold": float,
    "k": int,
    "strategy": str,
    "filter_mode": str,
    "inverse_weighting": str,
}


def parse_kv_lines(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and #-comments skipped."""
    values: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"config line {ln}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise DataError(f"config line {ln}: empty key")
        if key in values:
            raise DataError(f"config line {ln}: duplicate key {key!r}")
        values[key] = value
    return values


def config_from_text(text: str) -> dict[str, object]:
    """Typed settings from config-file text; unknown keys rejected."""
    typed: dict[str, object] = {}
    for key, value in parse_kv_lines(text).items():
        if key not in _FIELD_PARSERS:
            raise DataError(f"unknown config key {key!r}")
        try:
            typed[key] = _FIELD_PARSERS[key](value)
        except ValueError:
            raise DataError(f"config key {key!r}: cannot parse {value!r}") from None
    return typed


def load_config(path: str | Path) -> dict[str, object]:
    return config_from_text(Path(path).read_text(encoding="utf-8"))


def resolve_config(file_values: dict[str, object] | None = None,
                   cli_values: dict[str, object] | None = None) -> RunConfig:
    """Defaults < config file < command line."""
    merged: dict[str, object] = {
        f.name: f.default for f in dataclasses.fields(RunConfig)
    }
    for layer in (file_values, cli_values):
        if layer:
            for key, value in layer.items():
                if value is not None:
                    merged[key] = value
    try:
        return RunConfig(**merged)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
