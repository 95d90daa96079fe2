"""Scene documents: the JSON description of a container, a graph function,
grid and mesh resolutions and optional sweep ranges.  Unknown keys are
rejected so that typos fail loudly."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .domain import ConeDomain, Container, CrossSection, GraphFunction
from .errors import ValidationError
from .report import digest

_TOP_KEYS = {"container", "phi", "grid", "mesh", "sweep", "out"}
_CONTAINER_KEYS = {"kind", "cross_section", "theta1", "theta2", "radius"}
_CS_KEYS = {"interval", "polygon", "spacing", "convex"}
_PHI_KEYS = {"family", "params", "samples"}
_GRID_KEYS = {"delta"}
_MESH_KEYS = {"h"}
_SWEEP_KEYS = {"parameter", "values"}


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(
            f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


@dataclass(frozen=True)
class Scene:
    raw: dict
    container: Container
    phi: Optional[GraphFunction]
    cone_domain: Optional[ConeDomain]
    grid_delta: Optional[float]
    mesh_h: Optional[float]
    sweep_parameter: Optional[str]
    sweep_values: Optional[list]
    out: Optional[str]

    @property
    def digest(self) -> str:
        return digest(self.raw)

    def require_phi(self) -> GraphFunction:
        if self.phi is None:
            raise ValidationError("this command needs a 'phi' entry in the scene")
        return self.phi

    def require_grid(self) -> float:
        if self.grid_delta is None:
            raise ValidationError("this command needs 'grid': {\"delta\": ...}")
        return self.grid_delta

    def require_mesh(self) -> float:
        if self.mesh_h is None:
            raise ValidationError("this command needs 'mesh': {\"h\": ...}")
        return self.mesh_h


def _parse_container(d):
    if not isinstance(d, dict):
        raise ValidationError("'container' must be an object")
    _reject_unknown(d, _CONTAINER_KEYS, "container")
    kind = d.get("kind")
    if kind == "cylinder":
        cs_spec = d.get("cross_section")
        if not isinstance(cs_spec, dict):
            raise ValidationError("cylinder container needs 'cross_section'")
        _reject_unknown(cs_spec, _CS_KEYS, "container.cross_section")
        spacing = cs_spec.get("spacing")
        if spacing is None:
            raise ValidationError("cross_section needs 'spacing'")
        convex = cs_spec.get("convex")
        if "interval" in cs_spec:
            lo, hi = cs_spec["interval"]
            cs = CrossSection.from_interval(float(lo), float(hi), float(spacing),
                                            convex=convex)
        elif "polygon" in cs_spec:
            cs = CrossSection.from_polygon(cs_spec["polygon"], float(spacing),
                                           convex=convex)
        else:
            raise ValidationError("cross_section needs 'interval' or 'polygon'")
        return Container.cylinder(cs), None
    if kind == "cone":
        for key in ("theta1", "theta2", "radius"):
            if key not in d:
                raise ValidationError(f"cone container needs '{key}'")
        cont = Container.cone(float(d["theta1"]), float(d["theta2"]))
        return cont, ConeDomain(cont, float(d["radius"]))
    raise ValidationError(f"unknown container kind {kind!r}")


def _parse_phi(d, container: Container) -> GraphFunction:
    if not isinstance(d, dict):
        raise ValidationError("'phi' must be an object")
    _reject_unknown(d, _PHI_KEYS, "phi")
    if container.kind != "cylinder":
        raise ValidationError("graph functions are defined over cylinder containers")
    cs = container.cross_section
    if "samples" in d:
        if "family" in d or "params" in d:
            raise ValidationError("phi takes either samples or a family, not both")
        return GraphFunction.from_samples(cs, np.asarray(d["samples"], dtype=float))
    family = d.get("family")
    params = d.get("params")
    if family is None or not isinstance(params, dict):
        raise ValidationError("phi needs 'family' and 'params' (or 'samples')")
    return GraphFunction.from_family(cs, family, params)


def parse_scene(raw: dict) -> Scene:
    if not isinstance(raw, dict):
        raise ValidationError("scene must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "scene")
    if "container" not in raw:
        raise ValidationError("scene needs a 'container' entry")
    container, cone_domain = _parse_container(raw["container"])
    phi = None
    if "phi" in raw:
        phi = _parse_phi(raw["phi"], container)
    grid_delta = None
    if "grid" in raw:
        _reject_unknown(raw["grid"], _GRID_KEYS, "grid")
        grid_delta = float(raw["grid"]["delta"])
        if grid_delta <= 0:
            raise ValidationError("grid delta must be positive")
    mesh_h = None
    if "mesh" in raw:
        _reject_unknown(raw["mesh"], _MESH_KEYS, "mesh")
        mesh_h = float(raw["mesh"]["h"])
        if mesh_h <= 0:
            raise ValidationError("mesh h must be positive")
    sweep_parameter = None
    sweep_values = None
    if "sweep" in raw:
        _reject_unknown(raw["sweep"], _SWEEP_KEYS, "sweep")
        sweep_parameter = raw["sweep"].get("parameter")
        sweep_values = raw["sweep"].get("values")
        if not isinstance(sweep_parameter, str) or not sweep_parameter:
            raise ValidationError("sweep needs a 'parameter' path")
        if not isinstance(sweep_values, list) or len(sweep_values) == 0:
            raise ValidationError("sweep needs a nonempty 'values' list")
    return Scene(
        raw=raw, container=container, phi=phi, cone_domain=cone_domain,
        grid_delta=grid_delta, mesh_h=mesh_h,
        sweep_parameter=sweep_parameter, sweep_values=sweep_values,
        out=raw.get("out"),
    )


def load_scene(path) -> Scene:
    """Parse a scene file; JSON syntax errors surface line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"scene parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scene(raw)


def scene_with_value(raw: dict, dotted_path: str, value) -> dict:
    """Copy of a raw scene with one dotted-path entry replaced (sweep rows)."""
    import copy

    new = copy.deepcopy(raw)
    parts = dotted_path.split(".")
    node = new
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ValidationError(f"sweep parameter path {dotted_path!r} not in scene")
        node = node[p]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ValidationError(f"sweep parameter path {dotted_path!r} not in scene")
    node[parts[-1]] = value
    new.pop("sweep", None)
    return new
