#!/usr/bin/env python3
"""
Configuration Manager for adsorbkit

Hierarchical settings, later layers winning:
1. Built-in defaults
2. A flat JSON or YAML config file
3. ``ADSORBKIT_<KEY>`` environment variables (after loading ``.env``)
4. Runtime overrides (CLI flags)

Keys are flat: trainer fields, model fields, data keys and logging keys
share one namespace. ``DEFAULTS`` groups them by section for display.
"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from src.exceptions import ConfigFileNotFoundError, ConfigurationError, ConfigValidationError
from src.logging import get_logger

from .config_loader import ConfigLoader

logger = get_logger(__name__)

ENV_PREFIX = "ADSORBKIT_"
# Names the config file itself rather than a setting
CONFIG_ENV = ENV_PREFIX + "CONFIG"


class ConfigManager:
    """Centralized configuration management for adsorbkit."""

    DEFAULTS: Dict[str, Dict[str, Any]] = {
        "trainer": {
            "max_epochs": 10,
            "batch_size": 8,
            "devices": 1,
            "strategy": "single",
            "accumulate_grad_batches": 1,
            "learning_rate": 0.003626,
            "gamma": 0.6878,
            "seed": 0,
            "checkpoint_dir": "checkpoints",
            "log_path": "metrics.csv",
            "early_stop_monitor": None,
            "early_stop_patience": 3,
        },
        "model": {
            "embed_dim": 32,
            "num_layers": 3,
            "node_mlp_dims": [48, 48],
            "edge_mlp_dims": [16, 16],
            "pos_mlp_dims": [64, 64],
            "activation": "relu",
            "readout": "sum",
            "node_proj_depth": 2,
            "node_proj_hidden": 128,
            "out_depth": 3,
            "out_hidden": 64,
            "update_positions": True,
        },
        "data": {
            "task": "is2re",
            "cutoff": 6.0,
            "max_neighbors": 50,
            "num_substrate": 8,
            "train_path": None,
            "val_path": None,
            "devset_dir": None,
        },
        "logging": {
            "log_level": "INFO",
            "log_format": "standard",
            "log_to_file": False,
        },
    }

    def __init__(
        self,
        config_file: Optional[Union[str, Path]] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        load_env: bool = True,
        environ: Optional[Mapping[str, str]] = None,
        env_file: Optional[Union[str, Path]] = None,
    ):
        """
        Args:
            config_file: JSON/YAML settings file (default: ``$ADSORBKIT_CONFIG`` if set)
            overrides: Highest-precedence settings; ``None`` values are skipped
            load_env: Whether to read ``.env`` (values already in the environment win)
            environ: Environment mapping to read instead of ``os.environ``
            env_file: ``.env`` path (default: the working directory's)
        """
        variables = dict(os.environ if environ is None else environ)
        if load_env:
            variables = ConfigLoader.merge_configs(self._read_env_file(env_file), variables)
        env = ConfigLoader.get_config_from_env(ENV_PREFIX, variables)
        named_file = env.pop("config", None)
        if config_file is None and named_file:
            config_file = named_file
        self.config_file = Path(config_file).expanduser() if config_file else None

        self._sources: Dict[str, str] = {}
        self._config = self.flat_defaults()
        if self.config_file is not None:
            self._apply(self._read_file(self.config_file), source=str(self.config_file))
        self._apply(self._env_settings(env), source="env")
        self._apply({k: v for k, v in (overrides or {}).items() if v is not None}, source="override")

    @staticmethod
    def _read_env_file(env_file: Optional[Union[str, Path]]) -> Dict[str, str]:
        path = Path(env_file).expanduser() if env_file else Path.cwd() / ".env"
        values = ConfigLoader.load_env_file(path)
        if values:
            logger.debug(f"Read {len(values)} variables from {path}")
        return values

    # -- layers ----------------------------------------------------------------
    @classmethod
    def flat_defaults(cls) -> Dict[str, Any]:
        flat: Dict[str, Any] = {}
        for section in cls.DEFAULTS.values():
            flat.update(copy.deepcopy(section))
        return flat

    @classmethod
    def valid_keys(cls) -> List[str]:
        return sorted(cls.flat_defaults())

    @classmethod
    def section_of(cls, key: str) -> str:
        for name, section in cls.DEFAULTS.items():
            if key in section:
                return name
        raise ConfigValidationError(f"Unknown configuration key '{key}'", valid_keys=cls.valid_keys())

    def _read_file(self, path: Path) -> Dict[str, Any]:
        try:
            document = ConfigLoader.load_document(path)
        except FileNotFoundError as e:
            raise ConfigFileNotFoundError(f"Configuration file not found: {path}") from e
        except (ValueError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Could not parse configuration file: {e}", {"path": str(path)}) from e
        if not isinstance(document, dict):
            raise ConfigurationError("Configuration file must hold a key-value mapping", {"path": str(path)})
        logger.debug(f"Loaded configuration from {path}")
        return document

    def _env_settings(self, env: Mapping[str, str]) -> Dict[str, Any]:
        known = self.flat_defaults()
        settings = {}
        for key, text in env.items():
            if key not in known:
                logger.warning(f"Ignoring unknown environment setting {ENV_PREFIX}{key.upper()}")
                continue
            settings[key] = ConfigLoader.parse_value(text)
        return settings

    def _apply(self, settings: Mapping[str, Any], source: str):
        defaults = self.flat_defaults()
        unknown = sorted(set(settings) - set(defaults))
        if unknown:
            raise ConfigValidationError(
                f"Unknown configuration keys: {', '.join(unknown)}",
                valid_keys=defaults,
                details={"source": source},
            )
        for key, value in settings.items():
            self._config[key] = self._coerce(key, value, defaults[key])
            self._sources[key] = source

    @staticmethod
    def _coerce(key: str, value: Any, default: Any) -> Any:
        if isinstance(value, tuple):
            value = list(value)
        if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if isinstance(default, bool) and isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ConfigValidationError(f"'{key}' expects a boolean", details={"given": value})
        return value

    # -- access ----------------------------------------------------------------
    def get(self, key: str, default: Any = None) -> Any:
        return self._config.get(key, default)

    def __getitem__(self, key: str) -> Any:
        if key not in self._config:
            self.section_of(key)
        return self._config[key]

    def set(self, key: str, value: Any):
        self._apply({key: value}, source="override")

    def source_of(self, key: str) -> str:
        """Which layer last set ``key``: ``default``, the file path, ``env`` or ``override``."""
        self.section_of(key)
        return self._sources.get(key, "default")

    def section(self, name: str) -> Dict[str, Any]:
        if name not in self.DEFAULTS:
            raise ConfigValidationError(f"Unknown configuration section '{name}'", valid_keys=self.DEFAULTS)
        return {key: copy.deepcopy(self._config[key]) for key in self.DEFAULTS[name]}

    def resolved(self) -> Dict[str, Any]:
        """The flat document with every default materialized."""
        return copy.deepcopy(self._config)

    def to_trainer_config(self):
        from src.trainer.config import TrainerConfig

        return TrainerConfig.from_dict(self.section("trainer"))

    def to_model_config(self):
        from src.models.egnn import EGNNConfig

        return EGNNConfig.from_dict(self.section("model"))

    def validate(self):
        """Build every typed config once; raises on the first invalid value."""
        from src.tasks.kinds import TaskKind

        self.to_trainer_config()
        self.to_model_config()
        TaskKind.parse(self._config["task"])
        problems = {}
        if not isinstance(self._config["cutoff"], (int, float)) or self._config["cutoff"] <= 0:
            problems["cutoff"] = self._config["cutoff"]
        max_neighbors = self._config["max_neighbors"]
        if max_neighbors is not None and (not isinstance(max_neighbors, int) or max_neighbors < 1):
            problems["max_neighbors"] = max_neighbors
        if not isinstance(self._config["num_substrate"], int) or self._config["num_substrate"] < 0:
            problems["num_substrate"] = self._config["num_substrate"]
        if problems:
            raise ConfigValidationError("Invalid data settings", details=problems)

    def save(self, path: Union[str, Path]):
        """Write the resolved document; the format follows the extension."""
        if Path(path).suffix.lower() in (".yaml", ".yml"):
            ConfigLoader.save_yaml(self.resolved(), path)
        else:
            ConfigLoader.save_json(self.resolved(), path)

    def __repr__(self) -> str:
        return f"ConfigManager(config_file={self.config_file})"
