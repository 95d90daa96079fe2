"""Command-line front end: scene ingestion, dispatch, artifact emission.

Exit codes: 0 success, 2 validation error, 3 solver error.  All data files
(JSON with sorted keys, CSV, PGM) are byte-deterministic for a given scene;
wall-clock timings live in manifest.json only.  Each report also renders a
PNG figure alongside the delimited output.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import plots
from .audit import overdetermined_audit
from .cheeger import (
    cheeger_bruteforce,
    cheeger_dinkelbach,
    non_self_cheeger_witness,
    self_cheeger_test,
)
from .domain import build_subgraph_domain, rasterize, triangulate
from .errors import CheegerKitError, SolverError, ValidationError
from .fem import (
    cheeger_eigen_bound,
    gradient_necessary_condition,
    solve_eigen,
    solve_torsion,
    torsion_certificate,
)
from .geometry import mean_curvature, minkowski_check, orthogonality_residual
from .report import RunManifest, write_csv, write_json, write_pgm
from .scene import load_scene, parse_scene, scene_with_value

log = logging.getLogger("cheegerkit")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _out_dir(args, scene) -> Path:
    out = args.out or scene.out or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_resolutions(text):
    vals = []
    for part in text.split(","):
        part = part.strip()
        if "/" in part:
            num, den = part.split("/")
            vals.append(float(Fraction(int(num), int(den))))
        else:
            vals.append(float(part))
    if not vals or any(v <= 0 for v in vals):
        raise ValidationError(f"bad resolution list {text!r}")
    return vals


def _grid_for(scene):
    if scene.container.kind == "cone":
        return rasterize(scene.cone_domain, scene.require_grid())
    domain = build_subgraph_domain(scene.container, scene.require_phi())
    return rasterize(domain, scene.require_grid())


def cmd_curvature(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    with manifest.stage("curvature"):
        field = mean_curvature(phi)
    rows = list(field.rows())
    header = ["x", "H"] if phi.cross_section.dim == 1 else ["x", "y", "H"]
    manifest.add_output(write_csv(out / "curvature.csv", header, rows))
    manifest.add_output(write_json(out / "curvature.json", {
        "op": "curvature",
        "inputs_digest": scene.digest,
        "values": {"mean_H": field.mean, "max_H": field.max, "std_H": field.std},
    }))
    with manifest.stage("figures"):
        if phi.cross_section.dim == 1:
            xs = [r[0] for r in rows]
            manifest.add_output(plots.profile_plot(
                out / "curvature.png", xs, {"H": [r[-1] for r in rows]},
                "x", "H", "graph mean curvature"))
        else:
            manifest.add_output(plots.bars_plot(
                out / "curvature.png", ["mean", "max", "std"],
                [field.mean, field.max, field.std], "graph mean curvature"))
    return EXIT_OK


def cmd_minkowski(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    with manifest.stage("minkowski"):
        mk = minkowski_check(phi)
        residual = orthogonality_residual(phi)
    manifest.add_output(write_json(out / "minkowski.json", {
        "op": "minkowski",
        "inputs_digest": scene.digest,
        "values": {
            "lhs": mk.lhs, "rhs": mk.rhs, "boundary_term": mk.boundary_term,
            "identity_gap": mk.identity_gap,
            "orthogonality_residual": residual,
        },
    }))
    with manifest.stage("figures"):
        manifest.add_output(plots.bars_plot(
            out / "minkowski.png", ["lhs", "rhs", "boundary"],
            [mk.lhs, mk.rhs, mk.boundary_term], "Minkowski identity terms"))
    return EXIT_OK


def cmd_cheeger(scene, args, manifest) -> int:
    out = _out_dir(args, scene)
    with manifest.stage("rasterize"):
        grid = _grid_for(scene)
    with manifest.stage("solve"):
        result = cheeger_bruteforce(grid) if args.oracle else cheeger_dinkelbach(grid)
    manifest.add_output(write_json(out / "cheeger.json", {
        "op": "cheeger",
        "inputs_digest": scene.digest,
        "values": {
            "h": result.h,
            "iterations": result.iterations,
            "method": result.method,
            "cells": grid.n_cells,
            "minimizer_cells": result.minimizer.n_selected,
            "touches_relative_boundary": result.touched_relative_boundary,
        },
    }))
    if grid.dim == 2:
        manifest.add_output(write_pgm(out / "mask.pgm", result.minimizer))
        with manifest.stage("figures"):
            manifest.add_output(plots.mask_plot(
                out / "mask.png", result.minimizer,
                f"Cheeger minimizer, h = {result.h:.6g}"))
    return EXIT_OK


def cmd_self_cheeger(scene, args, manifest) -> int:
    out = _out_dir(args, scene)
    with manifest.stage("rasterize"):
        grid = _grid_for(scene)
    with manifest.stage("solve"):
        res = self_cheeger_test(grid)
    manifest.add_output(write_json(out / "self_cheeger.json", {
        "op": "self-cheeger",
        "inputs_digest": scene.digest,
        "values": {
            "is_self_cheeger": res.is_self_cheeger,
            "h": res.h,
            "ratio_omega": res.ratio_omega,
        },
    }))
    if grid.dim == 2:
        manifest.add_output(write_pgm(out / "witness.pgm", res.witness))
        with manifest.stage("figures"):
            manifest.add_output(plots.mask_plot(
                out / "witness.png", res.witness,
                f"self-Cheeger: {res.is_self_cheeger}"))
    return EXIT_OK


def cmd_witness(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    with manifest.stage("witness"):
        w = non_self_cheeger_witness(phi)
    manifest.add_output(write_json(out / "witness.json", {
        "op": "witness",
        "inputs_digest": scene.digest,
        "values": {
            "delta": w.delta, "alpha": w.alpha, "t": w.t,
            "old_ratio": w.old_ratio, "new_ratio": w.new_ratio,
            "improvement": w.old_ratio - w.new_ratio,
        },
    }))
    with manifest.stage("figures"):
        cs = phi.cross_section
        if cs.dim == 1:
            manifest.add_output(plots.profile_plot(
                out / "witness.png", cs.nodes_x,
                {"phi": phi.values, "phi + t v": phi.values + w.t * w.v},
                "x", "graph height", "ratio-decreasing perturbation"))
    return EXIT_OK


def cmd_torsion(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    domain = build_subgraph_domain(scene.container, phi)
    with manifest.stage("mesh"):
        mesh = triangulate(domain, scene.require_mesh())
    with manifest.stage("solve"):
        u = solve_torsion(mesh)
        cert = torsion_certificate(mesh, u)
    manifest.add_output(write_json(out / "torsion.json", {
        "op": "torsion",
        "inputs_digest": scene.digest,
        "values": {
            "c_est": cert.c_est,
            "overdet_residual": cert.overdet_residual,
            "grad_bound_margin": cert.grad_bound_margin,
            "volume_identity_gap": cert.volume_identity_gap,
            "max_p": float(cert.p_values.max()),
            "nodes": mesh.n_nodes,
        },
    }))
    manifest.add_output(write_csv(
        out / "torsion.csv", ["x", "y", "u"],
        [(x, y, v) for (x, y), v in zip(mesh.nodes, u.values)]))
    with manifest.stage("figures"):
        manifest.add_output(plots.field_plot(
            out / "torsion.png", mesh, u.values, "torsion solution"))
    return EXIT_OK


def cmd_eigen(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    domain = build_subgraph_domain(scene.container, phi)
    with manifest.stage("mesh"):
        mesh = triangulate(domain, scene.require_mesh())
    with manifest.stage("solve"):
        eig = solve_eigen(mesh)
    manifest.add_output(write_json(out / "eigen.json", {
        "op": "eigen",
        "inputs_digest": scene.digest,
        "values": {"lambda1": eig.lambda1, "nodes": mesh.n_nodes},
    }))
    manifest.add_output(write_csv(
        out / "eigen.csv", ["x", "y", "u"],
        [(x, y, v) for (x, y), v in zip(mesh.nodes, eig.eigenfunction.values)]))
    with manifest.stage("figures"):
        manifest.add_output(plots.field_plot(
            out / "eigen.png", mesh, eig.eigenfunction.values,
            f"first eigenfunction, lambda1 = {eig.lambda1:.6g}"))
    return EXIT_OK


def cmd_audit(scene, args, manifest) -> int:
    phi = scene.require_phi()
    out = _out_dir(args, scene)
    if args.resolutions:
        resolutions = _parse_resolutions(args.resolutions)
    else:
        h = scene.require_mesh()
        resolutions = [4 * h, 2 * h, h]
    with manifest.stage("audit"):
        report = overdetermined_audit(scene.container, phi, resolutions,
                                      grid_delta=scene.grid_delta)
    body = report.as_dict()
    body["op"] = "audit"
    body["inputs_digest"] = scene.digest
    manifest.add_output(write_json(out / "audit.json", body))
    manifest.add_output(write_csv(
        out / "convergence.csv",
        ["mesh", "overdet_residual", "volume_identity_gap", "c_est", "rate"],
        [(r["mesh"], r["overdet_residual"], r["volume_identity_gap"],
          r["c_est"], r["rate"]) for r in report.convergence]))
    with manifest.stage("figures"):
        if report.convergence:
            manifest.add_output(plots.convergence_plot(
                out / "audit.png", report.convergence,
                "overdetermination under refinement"))
    for check in report.checks:
        log.info("%-28s %-5s", check["check"], check["status"])
    return EXIT_OK


def _sweep_row(raw, parameter, value):
    row = {"parameter": parameter, "value": value, "status": "ok", "error": "",
           "h_cheeger": None, "lambda1": None, "cheeger_bound": None,
           "overdet_residual": None, "filter_lhs": None, "filter_rhs": None,
           "filter_satisfied": None}
    try:
        scene = parse_scene(scene_with_value(raw, parameter, value))
        phi = scene.require_phi()
        domain = build_subgraph_domain(scene.container, phi)
        grid = rasterize(domain, scene.require_grid())
        result = cheeger_dinkelbach(grid)
        row["h_cheeger"] = result.h
        mesh = triangulate(domain, scene.require_mesh())
        eig = solve_eigen(mesh)
        row["lambda1"] = eig.lambda1
        bound = cheeger_eigen_bound(eig.lambda1, result.h)
        row["cheeger_bound"] = bound.bound
        cert = torsion_certificate(mesh, solve_torsion(mesh))
        row["overdet_residual"] = cert.overdet_residual
        gf = gradient_necessary_condition(phi)
        row["filter_lhs"] = gf.lhs
        row["filter_rhs"] = gf.rhs
        row["filter_satisfied"] = gf.satisfied
    except CheegerKitError as exc:
        row["status"] = "error"
        row["error"] = str(exc).replace(",", ";")
    return row


def cmd_sweep(scene, args, manifest) -> int:
    if scene.sweep_parameter is None:
        raise ValidationError("sweep needs a 'sweep' entry in the scene")
    out = _out_dir(args, scene)
    values = scene.sweep_values
    workers = max(1, int(os.environ.get("CHEEGERKIT_THREADS", "1")))
    with manifest.stage("sweep"):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(
                    lambda v: _sweep_row(scene.raw, scene.sweep_parameter, v), values))
        else:
            rows = [_sweep_row(scene.raw, scene.sweep_parameter, v) for v in values]
    header = ["parameter", "value", "h_cheeger", "lambda1", "cheeger_bound",
              "overdet_residual", "filter_lhs", "filter_rhs",
              "filter_satisfied", "status", "error"]
    manifest.add_output(write_csv(
        out / "sweep.csv", header,
        [tuple("" if r[k] is None else r[k] for k in header) for r in rows]))
    with manifest.stage("figures"):
        manifest.add_output(plots.sweep_plot(
            out / "sweep.png", [r["value"] for r in rows],
            {"lambda1": [r["lambda1"] for r in rows],
             "h^2/4": [r["cheeger_bound"] for r in rows],
             "h": [r["h_cheeger"] for r in rows]},
            f"sweep over {scene.sweep_parameter}"))
    return EXIT_OK


_COMMANDS = {
    "curvature": cmd_curvature,
    "minkowski": cmd_minkowski,
    "cheeger": cmd_cheeger,
    "self-cheeger": cmd_self_cheeger,
    "witness": cmd_witness,
    "torsion": cmd_torsion,
    "eigen": cmd_eigen,
    "audit": cmd_audit,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cheegerkit",
        description="Relative Cheeger sets, CMC graph functionals and mixed "
                    "boundary value certificates on desk-scale domains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scene", required=True, help="scene JSON path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--oracle", action="store_true",
                       help="use the exhaustive solver (cheeger only, <= 22 cells)")
        p.add_argument("--resolutions", default=None,
                       help="comma-separated mesh sizes for audit, e.g. 1/16,1/32,1/64")
        p.add_argument("--quiet", action="store_true", help="suppress log output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s")
    try:
        scene = load_scene(args.scene)
        manifest = RunManifest(command=args.command, scene_digest=scene.digest)
        code = _COMMANDS[args.command](scene, args, manifest)
        manifest.write(_out_dir(args, scene))
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CheegerKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
