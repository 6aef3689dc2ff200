"""Parameter-source resolution for the CLI: presets, JSON files, overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

from .errors import ConfigError
from .model import PARAM_KEYS, ModelParams, PRESETS


@dataclass
class RunConfig:
    params: ModelParams
    out: str | None
    svg: bool
    seed: int | None


def parse_override(expression: str) -> tuple[str, float]:
    """Parse one `--set key=value` override."""
    key, sep, raw = expression.partition("=")
    if not sep:
        raise ConfigError(f"--set expects key=value, got {expression!r}")
    key = key.strip()
    if key not in PARAM_KEYS:
        raise ConfigError(f"--set key {key!r} is not a model parameter "
                          f"(expected one of {', '.join(PARAM_KEYS)})")
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"--set {key}: {raw!r} is not a number") from None
    return key, value


def load_params_file(path: str) -> ModelParams:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ModelParams.from_dict(data)


def resolve_params(preset: str | None, params_file: str | None,
                   overrides: list[str]) -> ModelParams:
    """Exactly one source (preset XOR file), then apply --set overrides."""
    if (preset is None) == (params_file is None):
        raise ConfigError("exactly one parameter source is required: "
                          "--preset or --params <file>")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} "
                              f"(available: {', '.join(sorted(PRESETS))})")
        params = PRESETS[preset]
    else:
        params = load_params_file(params_file)
    if overrides:
        params = replace(params, **dict(parse_override(o) for o in overrides))
    return params


def load_config(args) -> RunConfig:
    """Build the shared RunConfig from parsed CLI arguments."""
    params = resolve_params(args.preset, args.params, args.set or [])
    out = args.out
    if out is not None:
        parent = os.path.dirname(os.path.abspath(out))
        if not os.path.isdir(parent):
            raise ConfigError(f"output directory does not exist: {parent}")
    if args.svg and out is None:
        raise ConfigError("--svg requires --out to derive the image path")
    return RunConfig(params=params, out=out, svg=args.svg, seed=args.seed)
