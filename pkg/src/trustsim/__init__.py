"""Deterministic multi-agent trust simulation and scheduling library."""

__version__ = "0.1.0"
