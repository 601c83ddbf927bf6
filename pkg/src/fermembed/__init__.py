"""Fermionic embedding and guiding-state workbench."""

__version__ = "0.1.0"
