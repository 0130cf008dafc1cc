from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml


@dataclass(slots=True)
class LoadError:
    kind: str  # e.g. "not_found", "invalid_json", "invalid_yaml"
    detail: str


JsonData = Any


def load_json(path: Path) -> tuple[JsonData | None, LoadError | None]:
    """Pure JSON file loader.

    Returns a tuple of (data, error). Never raises. Callers translate the
    error at the boundary (exit code in the CLI, HTTP status in the API).
    """
    if not path.exists():
        return None, LoadError("not_found", f"{path.name} not found")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        return None, LoadError("io_error", f"Failed reading {path.name}: {e}")
    try:
        return json.loads(text), None
    except json.JSONDecodeError as e:
        return None, LoadError("invalid_json", f"Invalid JSON in {path.name}: {e}")


def load_yaml_mapping(path: Path) -> tuple[dict[str, Any] | None, LoadError | None]:
    """YAML loader that only accepts a mapping at the root; empty files give {}."""
    if not path.exists():
        return None, LoadError("not_found", f"{path.name} not found")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        return None, LoadError("io_error", f"Failed reading {path.name}: {e}")
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        return None, LoadError("invalid_yaml", f"Invalid YAML in {path.name}: {e}")
    if not isinstance(data, dict):
        return None, LoadError("root_not_mapping", f"{path.name} root must be a mapping")
    return data, None


def load_csv_rows(path: Path) -> tuple[list[dict[str, float]] | None, LoadError | None]:
    """Numeric CSV with a header row, as a list of column -> float dicts."""
    if not path.exists():
        return None, LoadError("not_found", f"{path.name} not found")
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        return None, LoadError("io_error", f"Failed reading {path.name}: {e}")
    try:
        return [{k: float(v) for k, v in row.items()} for row in rows], None
    except (TypeError, ValueError) as e:
        return None, LoadError("invalid_csv", f"Non-numeric value in {path.name}: {e}")
