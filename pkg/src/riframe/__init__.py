"""Rotation-invariant point-cloud learning with local and global reference frames."""

__version__ = "0.1.0"
