"""Shared construction helpers for the test suite."""

import numpy as np

from cheegerkit.domain import (
    ConeDomain,
    Container,
    CrossSection,
    GraphFunction,
    VolumeGrid,
    build_subgraph_domain,
    rasterize,
)


def strip(lo=0.0, hi=1.0, spacing=1 / 128):
    cs = CrossSection.from_interval(lo, hi, spacing)
    return cs, Container.cylinder(cs)


def flat_grid(height=1.0, delta=1 / 64, spacing=1 / 128):
    cs, cont = strip(spacing=spacing)
    phi = GraphFunction.from_family(cs, "constant", {"h": height})
    return rasterize(build_subgraph_domain(cont, phi), delta)


def random_small_grid(rng, max_cells=22):
    """Random small domain over one of the supported containers."""
    kind = rng.choice(["cyl2d", "cyl2d", "cyl2d", "cyl2d", "cone", "cone", "cyl3d"])
    if kind == "cyl2d":
        nx = int(rng.integers(2, 6))
        ny = int(rng.integers(2, 6))
        extra = int(rng.integers(0, 3))
        delta = float(rng.choice([0.125, 0.25, 0.5]))
        cs = CrossSection.from_interval(0.0, (nx + extra) * delta, delta)
        cont = Container.cylinder(cs)
        shape = (ny, nx)
        origin = (int(rng.integers(0, extra + 1)), int(rng.integers(0, 3)))
    elif kind == "cone":
        t1 = float(rng.uniform(0.2, 1.2))
        t2 = float(rng.uniform(t1 + 0.3, 2.9))
        cont = Container.cone(t1, t2)
        delta = float(rng.choice([0.125, 0.25]))
        shape = (int(rng.integers(2, 6)), int(rng.integers(2, 6)))
        origin = (int(rng.integers(-2, 3)), int(rng.integers(0, 4)))
    else:
        cs = CrossSection.from_polygon([[0, 0], [1, 0], [1, 1], [0, 1]], 0.25)
        cont = Container.cylinder(cs)
        delta = 0.125
        shape = (int(rng.integers(2, 4)), int(rng.integers(2, 4)),
                 int(rng.integers(2, 4)))
        origin = (int(rng.integers(0, 3)), int(rng.integers(0, 3)),
                  int(rng.integers(0, 3)))
    while True:
        inside = rng.random(shape) < rng.uniform(0.35, 0.8)
        if 1 <= inside.sum() <= max_cells:
            break
    return VolumeGrid(cont, delta, inside, origin=origin)


def random_cone_blob(rng, max_cells=40):
    t1 = float(rng.uniform(0.2, 1.2))
    t2 = float(rng.uniform(t1 + 0.3, 2.9))
    cont = Container.cone(t1, t2)
    delta = float(rng.choice([0.125, 0.25]))
    shape = (int(rng.integers(3, 8)), int(rng.integers(3, 8)))
    origin = (int(rng.integers(-3, 3)), int(rng.integers(0, 5)))
    while True:
        inside = rng.random(shape) < rng.uniform(0.4, 0.8)
        if 1 <= inside.sum() <= max_cells:
            break
    return VolumeGrid(cont, delta, inside, origin=origin)
