"""Run configuration, experiment reports and their persistence."""

from report.config import RunConfig
from report.context import ExperimentReport
from report.renderer import ReportRenderer, ReportTheme

__all__ = ["RunConfig", "ExperimentReport", "ReportRenderer", "ReportTheme"]
