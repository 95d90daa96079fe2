"""Deterministic artifact emission: JSON (UTF-8, sorted keys), CSV with a
header row, and P2 PGM masks.  Data files never contain timestamps; wall
clock goes to the run manifest only."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .domain import SubsetMask
from .errors import ValidationError


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, float) and not np.isfinite(obj):
        raise ValidationError("refusing to serialize a non-finite number")
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_json(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_pgm(path, mask: SubsetMask) -> Path:
    """P2 mask raster: 0 outside the domain, 128 domain, 255 selected.
    Rows run top to bottom (largest grid ordinate first)."""
    if mask.grid.dim != 2:
        raise ValidationError("PGM export is defined for planar grids")
    img = mask.to_raster()[::-1, :]
    h, w = img.shape
    lines = [f"P2", f"{w} {h}", "255"]
    for row in img:
        lines.append(" ".join(str(int(v)) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def digest(obj) -> str:
    blob = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """Per-run bookkeeping: the command, the scene digest, tool version,
    stage wall clock and emitted files.  Kept out of the data artifacts so
    those stay byte-identical across runs."""

    command: str
    scene_digest: str
    version: str = __version__
    stages: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def stage(self, name: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return self

            def __exit__(self, *exc):
                manifest.stages.append(
                    {"name": name, "seconds": time.perf_counter() - self.t0})
                return False

        return _Timer()

    def add_output(self, path) -> None:
        self.outputs.append(str(Path(path).name))

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        body = {
            "command": self.command,
            "scene_digest": self.scene_digest,
            "version": self.version,
            "stages": self.stages,
            "outputs": sorted(self.outputs),
        }
        path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
        return path
