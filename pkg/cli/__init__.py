"""Batch command-line surface."""
from .config_file import RunConfigFile
from .main import build_parser, main

__all__ = ["RunConfigFile", "build_parser", "main"]
