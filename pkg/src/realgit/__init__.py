"""realgit: stability of real reductive group actions on catalog models."""

__version__ = "0.1.0"
