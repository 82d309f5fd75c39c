#!/usr/bin/env python3
"""
Configuration Loader for adsorbkit

Utilities for reading and writing JSON/YAML documents, ``.env`` files and
prefixed environment variables.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import dotenv_values

YAML_SUFFIXES = (".yaml", ".yml")


class ConfigLoader:
    """Utility class for loading configuration from various sources."""

    @staticmethod
    def load_yaml(file_path: Union[str, Path]) -> Dict[str, Any]:
        """
        Load configuration from a YAML file.

        Raises:
            FileNotFoundError: If file doesn't exist
            yaml.YAMLError: If file is not valid YAML
        """
        path = Path(file_path).expanduser()

        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with open(path) as f:
            return yaml.safe_load(f) or {}

    @staticmethod
    def load_json(file_path: Union[str, Path]) -> Dict[str, Any]:
        """
        Load configuration from a JSON file.

        Raises:
            FileNotFoundError: If file doesn't exist
            json.JSONDecodeError: If file is not valid JSON
        """
        path = Path(file_path).expanduser()

        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with open(path) as f:
            return json.load(f)

    @classmethod
    def load_document(cls, file_path: Union[str, Path]) -> Dict[str, Any]:
        """Load a JSON or YAML document, chosen by file extension."""
        if Path(file_path).suffix.lower() in YAML_SUFFIXES:
            return cls.load_yaml(file_path)
        return cls.load_json(file_path)

    @staticmethod
    def save_yaml(data: Dict[str, Any], file_path: Union[str, Path]):
        path = Path(file_path).expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)

        with open(path, "w") as f:
            yaml.safe_dump(data, f, default_flow_style=False, sort_keys=False)

    @staticmethod
    def save_json(data: Dict[str, Any], file_path: Union[str, Path], indent: int = 2):
        path = Path(file_path).expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)

        with open(path, "w") as f:
            json.dump(data, f, indent=indent)
            f.write("\n")

    @staticmethod
    def load_env_file(file_path: Union[str, Path]) -> Dict[str, str]:
        """Parse a ``.env`` file without touching ``os.environ``."""
        path = Path(file_path).expanduser()
        if not path.exists():
            return {}
        return {k: v for k, v in dotenv_values(path).items() if v is not None}

    @staticmethod
    def get_config_from_env(prefix: str = "ADSORBKIT_", environ: Optional[Dict[str, str]] = None) -> Dict[str, str]:
        """
        Extract configuration from environment variables with a given prefix.

        Example:
            ADSORBKIT_MAX_EPOCHS=5 -> {"max_epochs": "5"}
        """
        environ = os.environ if environ is None else environ
        return {
            key[len(prefix) :].lower(): value
            for key, value in environ.items()
            if key.startswith(prefix) and len(key) > len(prefix)
        }

    @staticmethod
    def parse_value(text: str) -> Any:
        """Interpret a string setting as a YAML scalar or list (``5``, ``0.1``, ``null``, ``[16, 16]``)."""
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError:
            return text

    @staticmethod
    def merge_configs(*configs: Dict[str, Any]) -> Dict[str, Any]:
        """Shallow merge; later configs override earlier ones."""
        result: Dict[str, Any] = {}
        for config in configs:
            if config:
                result.update(config)
        return result

    def __repr__(self) -> str:
        return "ConfigLoader()"
