"""Command-line front end and experiment orchestration."""

from cli.app import build_parser, main
from cli.experiment import reproduce_appendix, run_experiment

__all__ = ["build_parser", "main", "reproduce_appendix", "run_experiment"]
