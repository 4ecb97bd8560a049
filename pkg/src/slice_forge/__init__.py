"""Slice regular functions on axially symmetric quaternionic domains."""

__version__ = "0.1.0"
