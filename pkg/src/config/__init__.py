#!/usr/bin/env python3
"""
adsorbkit Configuration Management Module

Layered settings for training runs:
- JSON and YAML configuration files
- ``.env`` files and ``ADSORBKIT_*`` environment variables
- Runtime overrides from the command line
"""

from .config_loader import ConfigLoader
from .config_manager import ENV_PREFIX, ConfigManager

__all__ = ["ConfigLoader", "ConfigManager", "ENV_PREFIX"]
