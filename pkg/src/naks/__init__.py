"""Random non-archimedean Kakeya sets over truncated local rings."""

__version__ = "0.1.0"
