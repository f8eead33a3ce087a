"""CSV/JSON persistence of runs and tables.

A run stored under PREFIX consists of ``PREFIX_umax.csv`` (t,umax), one
``PREFIX_snap_<k>.csv`` (coord,u) per snapshot and ``PREFIX_meta.json``.
Floats are written with ``repr`` so a stored run reloads bit for bit.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from estimates.errors import ConfigError
from estimates.geometry import Geometry
from estimates.solver import Solution


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_json(path: str, payload: dict) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, indent=2)
    return path


def save_run(sol: Solution, prefix: str, config: Optional[dict] = None) -> list[str]:
    """Write the series, every snapshot and the metadata; return the paths written."""

    paths = [write_csv(f"{prefix}_umax.csv", ("t", "umax"), sol.u_max_series)]
    coords = sol.geometry.coordinates
    for k, (_, u) in enumerate(sol.snapshots):
        paths.append(write_csv(f"{prefix}_snap_{k}.csv", ("coord", "u"), zip(coords, u)))
    meta = {
        "blew_up": sol.blew_up,
        "t_stop": sol.t_stop,
        "p": sol.p,
        "a": sol.a,
        "geometry": sol.geometry.to_dict(),
        "snapshot_times": [t for t, _ in sol.snapshots],
        "config": config or {},
    }
    paths.append(write_json(f"{prefix}_meta.json", meta))
    return paths


def load_run(prefix: str) -> Solution:
    meta_path = f"{prefix}_meta.json"
    try:
        with open(meta_path, "r", encoding="utf-8") as handle:
            meta = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"no stored run at {prefix!r} ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt run metadata: {exc.msg}", line=exc.lineno) from exc

    geom = Geometry.from_dict(meta["geometry"])
    _, series = read_csv(f"{prefix}_umax.csv")
    snapshots = []
    for k, t in enumerate(meta["snapshot_times"]):
        _, data = read_csv(f"{prefix}_snap_{k}.csv")
        snapshots.append((float(t), data[:, 1].copy()))
    return Solution(
        geometry=geom,
        p=float(meta["p"]),
        snapshots=snapshots,
        blew_up=bool(meta["blew_up"]),
        t_stop=float(meta["t_stop"]),
        u_max_series=[(float(t), float(m)) for t, m in series],
        a=float(meta.get("a", 1.0)),
    )
