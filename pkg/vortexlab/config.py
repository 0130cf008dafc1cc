"""Experiment configuration: YAML file, environment, then command-line flags.

Resolution order (first wins):
  1. explicit arguments (the CLI's --seed / --out / --workers)
  2. environment variables VORTEXLAB_SEED, VORTEXLAB_OUT_DIR, VORTEXLAB_WORKERS
     (a .env file in the working directory is read through python-dotenv)
  3. values in the YAML file
  4. model defaults
"""

from __future__ import annotations

import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from vortexlab.errors import ConfigError
from vortexlab.loader import load_yaml_mapping
from vortexlab.models import ExperimentConfig

ENV_SEED = "VORTEXLAB_SEED"
ENV_OUT_DIR = "VORTEXLAB_OUT_DIR"
ENV_WORKERS = "VORTEXLAB_WORKERS"

CONFIG_ECHO = "config.yaml"


def _format_errors(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return f"{len(parts)} config issue(s): " + "; ".join(parts)


def parse_config(data: Mapping[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from e


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return parse_config(data)


def serialize_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def _env_int(env: Mapping[str, str], name: str) -> int | None:
    raw = env.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name}={raw!r} is not an integer") from e


def load_config(
    path: Path | None = None,
    *,
    seed: int | None = None,
    out: Path | str | None = None,
    workers: int | None = None,
    env: Mapping[str, str] | None = None,
    dotenv: bool = True,
) -> ExperimentConfig:
    """Resolve the experiment config; raises ConfigError listing every issue."""
    if env is None:
        if dotenv:
            load_dotenv(override=False)
        env = os.environ
    data: dict[str, Any] = {}
    if path is not None:
        loaded, err = load_yaml_mapping(Path(path))
        if err:
            raise ConfigError(f"cannot load config {path}: {err.detail}")
        data = loaded

    config = parse_config(data)
    updates: dict[str, Any] = {}
    noise = config.noise.model_dump()
    output = config.output.model_dump()

    env_seed = _env_int(env, ENV_SEED)
    env_workers = _env_int(env, ENV_WORKERS)
    env_out = env.get(ENV_OUT_DIR) or None

    chosen_seed = seed if seed is not None else env_seed
    if chosen_seed is not None:
        noise["seed"] = chosen_seed
        updates["noise"] = noise
    chosen_out = out if out is not None else env_out
    if chosen_out is not None:
        output["directory"] = str(chosen_out)
        updates["output"] = output
    chosen_workers = workers if workers is not None else env_workers
    if chosen_workers is not None:
        updates["workers"] = chosen_workers
    if not updates:
        return config
    return parse_config({**config.model_dump(mode="json"), **updates})


def write_config_echo(config: ExperimentConfig, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_ECHO
    path.write_text(serialize_config(config), encoding="utf-8")
    return path
