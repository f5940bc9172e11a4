"""Run configuration stored as ``key=value`` text."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .imgfeat import FeatureConfig
from .pipeline import AsmConfig
from .reasoning import normalize_variant
from .selection import normalize_kind


class ConfigError(ValueError):
    pass


def parse_selector_pair(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"selector pair must look like 'first:second', got {text!r}")
    try:
        return normalize_kind(parts[0]), normalize_kind(parts[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    theta: float = 0.5
    variant: str = "rs_plus_rp"
    selector_pair: tuple[str, str] = ("perceptron", "rules")
    max_iterations: int = 10
    connectivity: int = 4
    seed: int = 0
    max_hypotheses: int = 3
    color_bins: int = 64
    brightness_bins: int = 64
    contrast_bins: int = 64
    fft_bins: int = 64

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be non-negative")
        object.__setattr__(self, "variant", normalize_variant(self.variant))
        object.__setattr__(self, "selector_pair", parse_selector_pair(":".join(self.selector_pair)))

    @property
    def features(self) -> FeatureConfig:
        return FeatureConfig(self.color_bins, self.brightness_bins, self.contrast_bins, self.fft_bins)

    def asm(self) -> AsmConfig:
        return AsmConfig(
            theta=self.theta,
            variant=self.variant,
            max_iterations=self.max_iterations,
            connectivity=self.connectivity,
            max_hypotheses=self.max_hypotheses,
            features=self.features,
        )

    def updated(self, **changes) -> RunConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def format_config(config: RunConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name == "selector_pair":
            value = ":".join(value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "selector_pair":
                values[key] = parse_selector_pair(value)
            elif key in ("theta",):
                values[key] = float(value)
            elif key == "variant":
                values[key] = value
            else:
                values[key] = int(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(format_config(config))
