"""Command line entry point: ``magbloch <command> --config <path>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bands import (
    band_sweep,
    calibrate_threshold,
    degeneracy_tracker,
    flatness_test,
    flux_sweep,
    lipschitz_estimate,
)
from .config import RunConfig, load_config
from .errors import MagBlochError
from .fiber import assemble, eigensolve, grid_per_cell
from .io import atomic_write, write_bands_csv, write_json
from .lattice import algebra_checks
from .nodal import nodal_scan_level
from .potential import random_potential
from .projectors import projected_perturbation

log = logging.getLogger("magbloch")

COMMANDS = ("algebra-check", "bands", "flatness", "perturb", "butterfly", "nodal")
ALGEBRA_TOL = 1e-12


def _grid(cfg: RunConfig):
    return grid_per_cell(cfg.lattice, cfg.flux, *cfg.n_per_cell)


def cmd_algebra_check(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    errors = algebra_checks(cfg.flux, cfg.options["algebra_samples"], cfg.options["seed"])
    passed = {k: v <= ALGEBRA_TOL for k, v in errors.items()}
    path = out / "algebra.json"
    write_json(path, "algebra-check", cfg.config_hash, cfg.normalized,
               {"errors": errors, "passed": passed, "tolerance": ALGEBRA_TOL})
    print("OK" if all(passed.values()) else "FAIL: " + ", ".join(k for k, ok in passed.items() if not ok))
    if not all(passed.values()):
        raise MagBlochError("algebra identities failed")
    return [path]


def cmd_bands(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    grid = _grid(cfg)
    bs = band_sweep(cfg.lattice, cfg.flux, cfg.potential, grid, cfg.theta_grid, cfg.bands, threads)
    path = out / "bands.csv"
    write_bands_csv(path, bs, cfg.config_hash)
    return [path]


def cmd_flatness(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    grid = _grid(cfg)
    opts = cfg.options
    if opts["threshold"] is None:
        log.info("calibrating threshold on the V = 0 fiber family")
        threshold, prov = calibrate_threshold(cfg.lattice, cfg.flux, grid, cfg.theta_grid, cfg.bands,
                                              opts["threshold_factor"], threads)
    else:
        threshold, prov = opts["threshold"], {"given": opts["threshold"]}
    bs = band_sweep(cfg.lattice, cfg.flux, cfg.potential, grid, cfg.theta_grid, cfg.bands, threads)
    report = flatness_test(bs, threshold, prov)
    csv_path, json_path = out / "bands.csv", out / "flatness.json"
    write_bands_csv(csv_path, bs, cfg.config_hash)
    write_json(json_path, "flatness", cfg.config_hash, cfg.normalized, {
        "dispersions": report.dispersions,
        "flat": report.flat,
        "threshold": report.threshold,
        "threshold_provenance": report.provenance,
        "lipschitz": lipschitz_estimate(bs, grid),
    })
    return [csv_path, json_path]


def cmd_perturb(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    grid = _grid(cfg)
    opts = cfg.options
    pert = opts["perturbation"]
    U = random_potential(cfg.lattice, pert["seed"], pert["max_harmonic"], pert["amplitude"])
    theta = tuple(opts["theta"])
    levels = degeneracy_tracker(cfg.lattice, cfg.flux, cfg.potential, U, opts["t_values"],
                                grid, theta, cfg.bands)
    es = eigensolve(assemble(grid, cfg.potential, theta), cfg.bands)
    body = []
    for lvl in levels:
        phi = es.eigenvectors[:, lvl.first_index:lvl.first_index + lvl.multiplicity]
        oracle = np.linalg.eigvalsh(projected_perturbation(phi, U, grid))
        body.append({
            "first_index": lvl.first_index,
            "multiplicity": lvl.multiplicity,
            "energy": lvl.energy,
            "window_radius": lvl.radius,
            "rows": lvl.rows,
            "fitted_slopes": None if lvl.slopes is None else lvl.slopes,
            "projected_slopes": oracle,
        })
    path = out / "perturb.json"
    write_json(path, "perturb", cfg.config_hash, cfg.normalized, {"levels": body})
    return [path]


def cmd_butterfly(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    opts = cfg.options
    rows = flux_sweep(cfg.lattice, cfg.potential, opts["fractions"], cfg.n_per_cell,
                      tuple(opts["theta"]), cfg.bands, opts["q_max"])
    lines = [
        f"# tool_version={__version__}",
        f"# config_hash={cfg.config_hash}",
        "p,q,flux,B,level,energy",
    ]
    for r in rows:
        for n, e in enumerate(r.energies):
            lines.append(f"{r.p},{r.q},{r.fraction!r},{r.B!r},{n},{e!r}")
    csv_path, json_path = out / "butterfly.csv", out / "butterfly.json"
    atomic_write(csv_path, "\n".join(lines) + "\n")
    write_json(json_path, "butterfly", cfg.config_hash, cfg.normalized, {
        "rows": [{"p": r.p, "q": r.q, "B": r.B, "energies": r.energies, "error": r.error} for r in rows],
    })
    return [csv_path, json_path]


def cmd_nodal(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    grid = _grid(cfg)
    opts = cfg.options
    level = opts["level"]
    m = max(cfg.bands, level + 2)
    H = assemble(grid, cfg.potential, tuple(opts["theta"]))
    es = eigensolve(H, m)
    report = nodal_scan_level(H, es, level, opts["zero_tol"], opts["grad_tol"])
    path = out / "nodal.json"
    write_json(path, "nodal", cfg.config_hash, cfg.normalized, {
        "level": level,
        "energy": es.eigenvalues[level],
        "zero_tol": report.zero_tol,
        "grad_tol": report.grad_tol,
        "components": [
            {"cells": c.cells, "size": c.size, "diameter": c.diameter, "kind": c.kind,
             "gradient_cells": c.gradient_cells}
            for c in report.components
        ],
    })
    return [path]


HANDLERS = {
    "algebra-check": cmd_algebra_check,
    "bands": cmd_bands,
    "flatness": cmd_flatness,
    "perturb": cmd_perturb,
    "butterfly": cmd_butterfly,
    "nodal": cmd_nodal,
}


def run_command(cmd: str, cfg: RunConfig, out_dir=".", threads: int = 1) -> list[Path]:
    if cmd not in HANDLERS:
        raise ValueError(f"unknown command {cmd!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for w in cfg.warnings:
        log.warning(w)
    return HANDLERS[cmd](cfg, out, threads)


def _error_record(exc: BaseException) -> dict:
    record = {
        "error": getattr(exc, "code", type(exc).__name__),
        "message": str(exc),
        "tool_version": __version__,
    }
    if hasattr(exc, "problems"):
        record["problems"] = [{"path": p, "message": m} for p, m in exc.problems]
    return record


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="magbloch", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML or JSON run configuration")
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for theta sweeps")
    parser.add_argument("--quiet", action="store_true", help="suppress progress lines")
    parser.add_argument("--version", action="version", version=f"magbloch {__version__}")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        paths = run_command(args.command, cfg, args.out_dir, max(1, args.threads))
    except (MagBlochError, ValueError, OSError) as exc:
        print(json.dumps(_error_record(exc), sort_keys=True), file=sys.stderr)
        return 1
    for p in paths:
        log.info("wrote %s", p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
