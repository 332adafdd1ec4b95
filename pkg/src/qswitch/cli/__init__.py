"""Command-line interface: config parsing, sweeps, optimization and dispatch."""

from .main import build_parser, main

__all__ = ["build_parser", "main"]
