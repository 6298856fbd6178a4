"""Benchmark toolkit for question answering over small clinical tables."""

__version__ = "0.1.0"

PROTOCOL_NAME = "tabexec"
PROTOCOL_VERSION = 1
