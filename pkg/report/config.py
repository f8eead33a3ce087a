"""Run configuration: JSON or YAML files describing one experiment."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

try:
    import yaml
except Exception:  # pragma: no cover - optional dependency
    yaml = None

import numpy as np
import sympy as sp

from estimates.admissibility import ParamPair, to_number
from estimates.errors import ConfigError, DomainError
from estimates.geometry import Geometry, GeometryKind
from estimates.solver import SolverConfig
from estimates.statics import profile_from_expression, seed_from_profile, talenti_profile

INITIAL_KINDS = ("constant", "sinusoidal", "profile")
PICK_RULES = ("simple", "hamilton")


def _path(where: str, key: str) -> str:
    return f"{where}.{key}" if where else key


def _expect_mapping(value: Any, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError("expected a mapping", field=where)
    return value


def _reject_unknown(payload: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(payload) - allowed)
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key {key!r}", field=_path(where, key))


def _real(payload: dict, key: str, where: str, default: Any = ..., *, positive: bool = False,
          allow_none: bool = False) -> Optional[float]:
    if key not in payload:
        if default is ...:
            raise ConfigError("missing required value", field=_path(where, key))
        return default
    raw = payload[key]
    if raw is None and allow_none:
        return None
    try:
        value = float(to_number(raw))
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"expected a number, got {raw!r}", field=_path(where, key)) from exc
    if not math.isfinite(value):
        raise ConfigError("must be finite", field=_path(where, key))
    if positive and value <= 0:
        raise ConfigError(f"must be > 0, got {raw!r}", field=_path(where, key))
    return value


def _integer(payload: dict, key: str, where: str, default: Any = ...) -> int:
    if key not in payload:
        if default is ...:
            raise ConfigError("missing required value", field=_path(where, key))
        return default
    raw = payload[key]
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"expected an integer, got {raw!r}", field=_path(where, key))
    return raw


def _flag(payload: dict, key: str, where: str, default: Optional[bool]) -> Optional[bool]:
    raw = payload.get(key, default)
    if raw is not None and not isinstance(raw, bool):
        raise ConfigError(f"expected true/false, got {raw!r}", field=_path(where, key))
    return raw


def _echo_number(value) -> Any:
    if isinstance(value, sp.Rational) and not value.is_Integer:
        return str(value)
    return float(value)


@dataclass
class InitialSpec:
    """Initial data: a constant, a cosine/sine bump on a constant, or a named profile."""

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.0
    mode: int = 1
    profile: Optional[str] = None

    def build(self, geom: Geometry, p: float) -> np.ndarray:
        if self.kind == "constant":
            return np.full(geom.num_points, self.value)
        if self.kind == "sinusoidal":
            x = geom.coordinates
            if geom.kind is GeometryKind.FLAT_TORUS_1D:
                wave = np.sin(2.0 * np.pi * self.mode * x / geom.extent)
            else:
                # even in r (and in θ at both poles) for radial kinds
                wave = np.cos(np.pi * self.mode * x / geom.extent)
            return self.value + self.amplitude * wave
        name = (self.profile or "").strip()
        profile = (
            talenti_profile()
            if name == "talenti"
            else profile_from_expression(name, n=geom.n, p=p)
        )
        return seed_from_profile(profile, geom)

    def to_dict(self) -> dict:
        payload: dict[str, Any] = {"kind": self.kind}
        if self.kind == "profile":
            payload["profile"] = self.profile
        else:
            payload["value"] = self.value
        if self.kind == "sinusoidal":
            payload["amplitude"] = self.amplitude
            payload["mode"] = self.mode
        return payload


@dataclass
class CheckToggles:
    liyau: bool = True
    liyau_t_fraction: float = 1.0
    harnack: bool = False
    harnack_paths: int = 20
    harnack_segments: int = 16
    monotone: bool = False
    T0: float = 0.0
    convexity: Optional[bool] = None
    decay: bool = False
    T_bar: Optional[float] = None
    blowup: bool = False
    pick_rule: str = "simple"
    slices: int = 3

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Tolerances:
    """Pass/fail tolerances; ``fit`` None means 3·(fit residual + extrapolation error)."""

    disc_factor: float = 10.0
    harnack: float = 0.05
    fit: Optional[float] = None
    liyau_abs: float = 0.05
    ccc_eps: float = 0.05
    trend_slack: float = 0.10

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class OutputSpec:
    prefix: Optional[str] = None
    html: bool = True
    markdown: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunConfig:
    geometry: Geometry
    solver: SolverConfig
    initial: InitialSpec = field(default_factory=InitialSpec)
    pairs: list[ParamPair] = field(default_factory=list)
    checks: CheckToggles = field(default_factory=CheckToggles)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    title: str = ""
    notes: str = ""

    def initial_data(self) -> np.ndarray:
        return self.initial.build(self.geometry, self.solver.p)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "geometry": self.geometry.to_dict(),
            "solver": self.solver.to_dict(),
            "initial": self.initial.to_dict(),
            "pairs": [
                {"alpha": _echo_number(pair.alpha), "beta": _echo_number(pair.beta)}
                for pair in self.pairs
            ],
            "checks": self.checks.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "output": self.output.to_dict(),
            "seed": self.seed,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, payload: Any) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ConfigError("top level must be a mapping")
        _reject_unknown(
            payload,
            {"title", "notes", "geometry", "solver", "initial", "pairs", "checks", "tolerances", "output", "seed"},
            "",
        )
        geometry = _parse_geometry(_expect_mapping(payload.get("geometry"), "geometry"))
        solver = _parse_solver(_expect_mapping(payload.get("solver"), "solver"))
        initial = _parse_initial(_expect_mapping(payload.get("initial"), "initial"))
        pairs = _parse_pairs(payload.get("pairs", []))
        checks = _parse_checks(_expect_mapping(payload.get("checks"), "checks"))
        tolerances = _parse_tolerances(_expect_mapping(payload.get("tolerances"), "tolerances"))
        output = _parse_output(_expect_mapping(payload.get("output"), "output"))
        seed = _integer(payload, "seed", "", 0) if "seed" in payload else 0
        title = payload.get("title", "") or ""
        notes = payload.get("notes", "") or ""
        if not isinstance(title, str):
            raise ConfigError("expected a string", field="title")
        if not isinstance(notes, str):
            raise ConfigError("expected a string", field="notes")

        config = cls(
            geometry=geometry,
            solver=solver,
            initial=initial,
            pairs=pairs,
            checks=checks,
            tolerances=tolerances,
            output=output,
            seed=seed,
            title=title,
            notes=notes,
        )
        config._validate_initial()
        return config

    def _validate_initial(self) -> None:
        try:
            u0 = self.initial_data()
        except DomainError as exc:
            raise ConfigError(str(exc), field="initial") from exc
        if not np.all(np.isfinite(u0)) or np.any(u0 <= 0):
            raise ConfigError("initial data must be finite and strictly positive", field="initial")
        if self.solver.blowup_cutoff <= float(u0.max()):
            raise ConfigError("must exceed the initial maximum", field="solver.blowup_cutoff")

    def save(self, path: str) -> None:
        data = self.to_dict()
        ext = os.path.splitext(path)[1].lower()
        if ext in {".yaml", ".yml"}:
            if yaml is None:
                raise RuntimeError("PyYAML is required to save YAML configs.")
            with open(path, "w", encoding="utf-8") as handle:
                yaml.safe_dump(data, handle, allow_unicode=True, sort_keys=False)
            return
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(data, handle, ensure_ascii=False, indent=2)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        ext = os.path.splitext(path)[1].lower()
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
        if ext in {".yaml", ".yml"}:
            if yaml is None:
                raise RuntimeError("PyYAML is required to load YAML configs.")
            try:
                payload = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                mark = getattr(exc, "problem_mark", None)
                line = mark.line + 1 if mark is not None else None
                raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=line) from exc
        else:
            try:
                payload = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
        return cls.from_dict(payload)


def _parse_geometry(section: dict) -> Geometry:
    _reject_unknown(section, {"kind", "n", "num_points", "extent"}, "geometry")
    kind_raw = section.get("kind")
    try:
        kind = GeometryKind(kind_raw)
    except ValueError as exc:
        choices = ", ".join(k.value for k in GeometryKind)
        raise ConfigError(f"expected one of {choices}, got {kind_raw!r}", field="geometry.kind") from exc
    n = _integer(section, "n", "geometry", 1 if kind is GeometryKind.FLAT_TORUS_1D else ...)
    num_points = _integer(section, "num_points", "geometry")
    default_extent = math.pi if kind is GeometryKind.RADIAL_SPHERE else ...
    extent = _real(section, "extent", "geometry", default_extent, positive=True)
    try:
        return Geometry(kind, n, num_points, extent)
    except DomainError as exc:
        raise ConfigError(str(exc), field="geometry") from exc


def _parse_solver(section: dict) -> SolverConfig:
    allowed = {
        "p", "dt_max", "snapshot_interval", "cfl", "blowup_cutoff", "t_end",
        "snapshot_growth", "max_halvings", "max_steps", "a",
    }
    _reject_unknown(section, allowed, "solver")
    kwargs = {
        "p": _real(section, "p", "solver", positive=True),
        "dt_max": _real(section, "dt_max", "solver", positive=True),
        "snapshot_interval": _real(section, "snapshot_interval", "solver", positive=True),
        "cfl": _real(section, "cfl", "solver", 0.4, positive=True),
        "blowup_cutoff": _real(section, "blowup_cutoff", "solver", 1e8, positive=True),
        "t_end": _real(section, "t_end", "solver", None, allow_none=True),
        "snapshot_growth": _real(section, "snapshot_growth", "solver", None, allow_none=True),
        "max_halvings": _integer(section, "max_halvings", "solver", 40),
        "max_steps": _integer(section, "max_steps", "solver", 5_000_000),
        "a": _real(section, "a", "solver", 1.0, positive=True),
    }
    try:
        return SolverConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc), field="solver") from exc


def _parse_initial(section: dict) -> InitialSpec:
    _reject_unknown(section, {"kind", "value", "amplitude", "mode", "profile"}, "initial")
    kind = section.get("kind", "constant")
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"expected one of {', '.join(INITIAL_KINDS)}, got {kind!r}", field="initial.kind")
    spec = InitialSpec(
        kind=kind,
        value=_real(section, "value", "initial", 1.0),
        amplitude=_real(section, "amplitude", "initial", 0.0),
        mode=_integer(section, "mode", "initial", 1),
        profile=section.get("profile"),
    )
    if kind == "profile" and not isinstance(spec.profile, str):
        raise ConfigError("a profile name or expression is required", field="initial.profile")
    if kind == "sinusoidal" and abs(spec.amplitude) >= spec.value:
        raise ConfigError("amplitude must be smaller than value to keep data positive", field="initial.amplitude")
    return spec


def _parse_pairs(raw: Any) -> list[ParamPair]:
    if not isinstance(raw, list):
        raise ConfigError("expected a list", field="pairs")
    pairs = []
    for index, entry in enumerate(raw):
        where = f"pairs[{index}]"
        entry = _expect_mapping(entry, where)
        _reject_unknown(entry, {"alpha", "beta"}, where)
        values = {}
        for key in ("alpha", "beta"):
            if key not in entry:
                raise ConfigError("missing required value", field=_path(where, key))
            try:
                values[key] = to_number(entry[key])
            except DomainError as exc:
                raise ConfigError(str(exc), field=_path(where, key)) from exc
        try:
            pairs.append(ParamPair(values["alpha"], values["beta"]))
        except DomainError as exc:
            key = "alpha" if "alpha" in str(exc) else "beta"
            raise ConfigError(str(exc), field=_path(where, key)) from exc
    return pairs


def _parse_checks(section: dict) -> CheckToggles:
    defaults = CheckToggles()
    _reject_unknown(section, set(defaults.__dict__), "checks")
    pick_rule = section.get("pick_rule", defaults.pick_rule)
    if pick_rule not in PICK_RULES:
        raise ConfigError(f"expected one of {', '.join(PICK_RULES)}, got {pick_rule!r}", field="checks.pick_rule")
    fraction = _real(section, "liyau_t_fraction", "checks", defaults.liyau_t_fraction, positive=True)
    if fraction > 1:
        raise ConfigError("must lie in (0, 1]", field="checks.liyau_t_fraction")
    toggles = CheckToggles(
        liyau=_flag(section, "liyau", "checks", defaults.liyau),
        liyau_t_fraction=fraction,
        harnack=_flag(section, "harnack", "checks", defaults.harnack),
        harnack_paths=_integer(section, "harnack_paths", "checks", defaults.harnack_paths),
        harnack_segments=_integer(section, "harnack_segments", "checks", defaults.harnack_segments),
        monotone=_flag(section, "monotone", "checks", defaults.monotone),
        T0=_real(section, "T0", "checks", defaults.T0),
        convexity=_flag(section, "convexity", "checks", defaults.convexity),
        decay=_flag(section, "decay", "checks", defaults.decay),
        T_bar=_real(section, "T_bar", "checks", None, allow_none=True),
        blowup=_flag(section, "blowup", "checks", defaults.blowup),
        pick_rule=pick_rule,
        slices=_integer(section, "slices", "checks", defaults.slices),
    )
    if toggles.harnack_segments < 8:
        raise ConfigError("must be >= 8", field="checks.harnack_segments")
    if toggles.slices < 1:
        raise ConfigError("must be >= 1", field="checks.slices")
    return toggles


def _parse_tolerances(section: dict) -> Tolerances:
    defaults = Tolerances()
    _reject_unknown(section, set(defaults.__dict__), "tolerances")
    return Tolerances(
        disc_factor=_real(section, "disc_factor", "tolerances", defaults.disc_factor, positive=True),
        harnack=_real(section, "harnack", "tolerances", defaults.harnack, positive=True),
        fit=_real(section, "fit", "tolerances", None, allow_none=True, positive=True),
        liyau_abs=_real(section, "liyau_abs", "tolerances", defaults.liyau_abs, positive=True),
        ccc_eps=_real(section, "ccc_eps", "tolerances", defaults.ccc_eps, positive=True),
        trend_slack=_real(section, "trend_slack", "tolerances", defaults.trend_slack, positive=True),
    )


def _parse_output(section: dict) -> OutputSpec:
    _reject_unknown(section, {"prefix", "html", "markdown"}, "output")
    prefix = section.get("prefix")
    if prefix is not None and not isinstance(prefix, str):
        raise ConfigError("expected a string", field="output.prefix")
    return OutputSpec(
        prefix=prefix,
        html=_flag(section, "html", "output", True),
        markdown=_flag(section, "markdown", "output", True),
    )
