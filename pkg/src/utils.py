"""
File helpers shared by the CLI: JSON/YAML IO and output paths.
"""

import json
import os
from typing import Any, Dict

import numpy as np
import yaml


def _to_builtin(data: Any) -> Any:
    """Convert numpy scalars/arrays to plain Python so JSON and YAML dumpers accept them."""
    if isinstance(data, dict):
        return {str(k): _to_builtin(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_to_builtin(v) for v in data]
    if isinstance(data, np.ndarray):
        return _to_builtin(data.tolist())
    if isinstance(data, np.generic):
        return data.item()
    return data


def load_yaml(filepath: str) -> Any:
    """Load and parse a YAML file."""
    with open(filepath, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def save_yaml(filepath: str, data: Any) -> None:
    """Save data to a YAML file, keeping key order and writing multi-line strings as blocks."""

    def literal_presenter(dumper, text):
        if "\n" in text:
            return dumper.represent_scalar("tag:yaml.org,2002:str", text, style="|")
        return dumper.represent_scalar("tag:yaml.org,2002:str", text)

    class BlockDumper(yaml.SafeDumper):
        pass

    BlockDumper.add_representer(str, literal_presenter)

    with open(filepath, "w", encoding="utf-8") as f:
        yaml.dump(
            _to_builtin(data), f,
            Dumper=BlockDumper,
            default_flow_style=False,
            allow_unicode=True,
            sort_keys=False,
        )


def load_json(filepath: str) -> Any:
    """Load and parse a JSON file."""
    with open(filepath, "r", encoding="utf-8") as f:
        return json.load(f)


def save_json(filepath: str, data: Dict) -> None:
    """Save data to a JSON file."""
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(_to_builtin(data), f, indent=2, ensure_ascii=False)


def load_structured(filepath) -> Any:
    """
    Load a JSON or YAML document; YAML is tried for anything that is not *.json.
    Parse errors of either kind surface as ValueError.
    """
    filepath = str(filepath)
    if filepath.lower().endswith(".json"):
        return load_json(filepath)
    try:
        return load_yaml(filepath)
    except yaml.YAMLError as e:
        raise ValueError(str(e)) from e


def prepare_output_path(path: str) -> str:
    """
    Make sure the parent directory of an output file exists.
    Returns the path unchanged.
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def default_output_path(output_dir: str, subcommand: str, extension: str) -> str:
    """Output path used when --output is not given: <output_dir>/<subcommand>.<ext>."""
    os.makedirs(output_dir, exist_ok=True)
    return os.path.join(output_dir, f"{subcommand}.{extension}")
