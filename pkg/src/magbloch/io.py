"""Deterministic file output (CSV bands, JSON reports) and matching loaders.

Floats are written with ``repr`` so loading gives back the exact values.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bands import BandStructure, ThetaGrid

SCHEMA_VERSION = 1
BANDS_HEADER = "t1,t2,band,energy"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(payload: dict) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def report_document(kind: str, config_hash: str, config: dict, body: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "tool_version": __version__,
        "config_hash": config_hash,
        "config": config,
        **body,
    }


def write_json(path, kind: str, config_hash: str, config: dict, body: dict) -> None:
    atomic_write(path, dump_json(report_document(kind, config_hash, config, body)))


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    return doc


def bands_csv(bs: BandStructure, config_hash: str) -> str:
    lines = [
        f"# tool_version={__version__}",
        f"# schema_version={SCHEMA_VERSION}",
        f"# config_hash={config_hash}",
        f"# theta_grid={bs.tgrid.M1}x{bs.tgrid.M2}",
        f"# provenance={json.dumps(to_jsonable(bs.provenance), sort_keys=True)}",
        BANDS_HEADER,
    ]
    for j1 in range(bs.tgrid.M1):
        for j2 in range(bs.tgrid.M2):
            t1, t2 = bs.tgrid.coefficients(j1, j2)
            for n, e in enumerate(bs.energies[j1, j2]):
                lines.append(f"{t1!r},{t2!r},{n},{float(e)!r}")
    return "\n".join(lines) + "\n"


def write_bands_csv(path, bs: BandStructure, config_hash: str) -> None:
    atomic_write(path, bands_csv(bs, config_hash))


def read_bands_csv(path) -> tuple[BandStructure, dict]:
    meta, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                meta[key] = value
            elif line == BANDS_HEADER:
                continue
            elif line:
                t1, t2, n, e = line.split(",")
                rows.append((float(t1), float(t2), int(n), float(e)))
    M1, M2 = (int(v) for v in meta["theta_grid"].split("x"))
    tgrid = ThetaGrid(M1, M2)
    m = max(r[2] for r in rows) + 1
    energies = np.empty((M1, M2, m))
    for t1, t2, n, e in rows:
        energies[round(t1 * M1), round(t2 * M2), n] = e
    provenance = json.loads(meta.pop("provenance", "{}"))
    return BandStructure(energies, tgrid, provenance), meta
