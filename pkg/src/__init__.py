"""adsorbkit - equivariant graph networks for adsorbate/catalyst energies and forces."""

from .version import __version__

__all__ = ["__version__"]
