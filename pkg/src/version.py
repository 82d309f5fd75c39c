"""Version information for adsorbkit."""

__version__ = "0.1.0"
