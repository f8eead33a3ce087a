"""Experiment report: per-stage check results, an error registry and a run log."""

from __future__ import annotations

import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from time import perf_counter
from typing import Iterator, Optional

try:
    import yaml
except Exception:  # pragma: no cover - optional dependency
    yaml = None

from estimates import __version__
from estimates.errors import EstimateError

logger = logging.getLogger(__name__)


@dataclass
class CheckRecord:
    """Outcome of one stage; ``passed`` is None for informational stages."""

    stage: str
    passed: Optional[bool]
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "passed": self.passed, "data": self.data}


@dataclass
class ExperimentReport:
    """Collects everything a run produces so renderers and the CLI can surface it."""

    title: str = ""
    config: dict = field(default_factory=dict)
    notes: str = ""
    checks: list[CheckRecord] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    logs: list[dict] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    version: str = __version__

    def __enter__(self) -> "ExperimentReport":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        return False

    def register_check(self, stage: str, data: dict, passed: Optional[bool]) -> None:
        self.checks.append(CheckRecord(stage=stage, passed=passed, data=data))
        if passed is False:
            logger.warning("stage %s failed", stage)

    def register_error(self, *, stage: str, message: str, error_type: str) -> None:
        """Store stage errors so the renderer can surface them."""

        self.errors.append({"stage": stage, "message": message, "type": error_type})

    def log_run(self, *, stage: str, duration_ms: float, details: list[str]) -> None:
        """Persist a lightweight run log entry."""

        self.logs.append(
            {
                "stage": stage,
                "duration_ms": round(duration_ms, 2),
                "details": details,
            }
        )

    def add_artifact(self, path: str) -> None:
        self.artifacts.append(path)

    @contextmanager
    def stage(self, name: str) -> Iterator[list[str]]:
        """Time a stage, record toolkit errors instead of raising them.

        The yielded list collects short detail strings for the run log.
        """

        started = perf_counter()
        details: list[str] = []
        try:
            yield details
        except EstimateError as exc:
            self.register_error(stage=name, message=str(exc), error_type=type(exc).__name__)
            logger.error("stage %s: %s", name, exc)
        finally:
            self.log_run(stage=name, duration_ms=(perf_counter() - started) * 1000.0, details=details)

    def check(self, stage: str) -> Optional[CheckRecord]:
        for record in self.checks:
            if record.stage == stage:
                return record
        return None

    @property
    def overall_pass(self) -> bool:
        if self.errors:
            return False
        return all(record.passed is not False for record in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.overall_pass else 1

    # Persistence helpers
    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "title": self.title,
            "overall_pass": self.overall_pass,
            "config": self.config,
            "notes": self.notes,
            "checks": [record.to_dict() for record in self.checks],
            "errors": list(self.errors),
            "logs": list(self.logs),
            "artifacts": list(self.artifacts),
        }

    def save(self, path: str) -> None:
        data = self.to_dict()
        ext = os.path.splitext(path)[1].lower()
        if ext in {".yaml", ".yml"}:
            if yaml is None:
                raise RuntimeError("PyYAML is required to save YAML reports.")
            with open(path, "w", encoding="utf-8") as handle:
                yaml.safe_dump(data, handle, allow_unicode=True, sort_keys=False)
            return
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(data, handle, ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentReport":
        return cls(
            title=payload.get("title", ""),
            config=payload.get("config", {}),
            notes=payload.get("notes", ""),
            checks=[
                CheckRecord(stage=entry["stage"], passed=entry.get("passed"), data=entry.get("data", {}))
                for entry in payload.get("checks", [])
            ],
            errors=list(payload.get("errors", [])),
            logs=list(payload.get("logs", [])),
            artifacts=list(payload.get("artifacts", [])),
            version=payload.get("version", __version__),
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentReport":
        ext = os.path.splitext(path)[1].lower()
        with open(path, "r", encoding="utf-8") as handle:
            if ext in {".yaml", ".yml"}:
                if yaml is None:
                    raise RuntimeError("PyYAML is required to load YAML reports.")
                payload = yaml.safe_load(handle)
            else:
                payload = json.load(handle)
        return cls.from_dict(payload)
