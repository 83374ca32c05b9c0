"""Run configuration: parsing, validation and canonical hashing.

Configs are YAML documents; plain JSON is valid YAML, and YAML comments
are allowed. See ``configs/reference.yaml`` for an annotated example.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import gcd

import yaml

from .bands import ThetaGrid
from .errors import ConfigError, DegenerateLatticeError
from .lattice import FluxRational, Lattice, make_flux
from .potential import PotentialSpec, random_potential

SCHEMA = {
    "lattice": {"e1", "e2"},
    "flux": {"p", "q"},
    "potential": {"modes", "random", "constant"},
    "grid": {"N1", "N2"},
    "theta_grid": {"M1", "M2"},
    "bands": None,
    "options": {
        "threshold", "threshold_factor", "t_values", "perturbation", "seeds",
        "amplitude", "max_harmonic", "fractions", "q_max", "theta", "level",
        "zero_tol", "grad_tol", "algebra_samples", "seed",
    },
}
REQUIRED = ("lattice", "flux")
RANDOM_KEYS = {"seed", "max_harmonic", "amplitude"}

DEFAULT_OPTIONS = {
    "threshold": None,
    "threshold_factor": 10.0,
    "t_values": [-0.002, -0.001, 0.0, 0.001, 0.002],
    "perturbation": {"seed": 1, "max_harmonic": 2, "amplitude": 1.0},
    "seeds": list(range(10)),
    "amplitude": 0.5,
    "max_harmonic": 2,
    "fractions": [[1, 4], [1, 3], [1, 2], [2, 3], [1, 1]],
    "q_max": 12,
    "theta": [0.0, 0.0],
    "level": 0,
    "zero_tol": 1e-2,
    "grad_tol": 5e-2,
    "algebra_samples": 10000,
    "seed": 0,
}


@dataclass(frozen=True, eq=False)
class RunConfig:
    lattice: Lattice
    flux: FluxRational
    potential: PotentialSpec
    n_per_cell: tuple[int, int]
    theta_grid: ThetaGrid
    bands: int
    options: dict
    normalized: dict = field(repr=False)
    warnings: tuple[str, ...] = ()

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.normalized, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


class _Collector:
    def __init__(self):
        self.problems = []

    def add(self, path, message):
        self.problems.append((path, message))


def _vec2(value, path, errs):
    try:
        out = [float(value[0]), float(value[1])]
        if len(value) != 2:
            raise ValueError
        return out
    except (TypeError, ValueError, IndexError, KeyError):
        errs.add(path, "expected a pair of numbers")
        return None


def _int(value, path, errs, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        errs.add(path, f"expected an integer, got {value!r}")
        return None
    if minimum is not None and value < minimum:
        errs.add(path, f"must be >= {minimum}")
        return None
    return value


def _number(value, path, errs, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errs.add(path, f"expected a number, got {value!r}")
        return None
    if minimum is not None and value < minimum:
        errs.add(path, f"must be >= {minimum}")
        return None
    return float(value)


def _check_keys(section, allowed, path, errs):
    if not isinstance(section, dict):
        errs.add(path, "expected a mapping")
        return False
    for key in section:
        if key not in allowed:
            errs.add(f"{path}.{key}" if path else str(key), "unknown key")
    return True


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; all problems are reported together."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("", f"not valid YAML/JSON: {exc}")]) from exc
    if raw is None:
        raw = {}
    errs = _Collector()
    if not _check_keys(raw, SCHEMA.keys(), "", errs):
        raise ConfigError(errs.problems)
    for key in REQUIRED:
        if key not in raw:
            errs.add(key, "missing required key")
    warnings = []

    lattice = None
    lat = raw.get("lattice", {})
    if _check_keys(lat, SCHEMA["lattice"], "lattice", errs):
        vecs = {}
        for key in ("e1", "e2"):
            if key in lat:
                vecs[key] = _vec2(lat[key], f"lattice.{key}", errs)
            else:
                errs.add(f"lattice.{key}", "missing required key")
        e1, e2 = vecs.get("e1"), vecs.get("e2")
        if e1 is not None and e2 is not None:
            try:
                lattice = Lattice(tuple(e1), tuple(e2))
            except DegenerateLatticeError as exc:
                errs.add("lattice", str(exc))

    p = q = None
    fl = raw.get("flux", {})
    if _check_keys(fl, SCHEMA["flux"], "flux", errs):
        p = _int(fl.get("p"), "flux.p", errs)
        q = _int(fl.get("q", 1), "flux.q", errs, minimum=1)
        if p is not None and q is not None and gcd(abs(p), q) != 1:
            d = gcd(abs(p), q)
            warnings.append(f"flux {p}/{q} reduced to {p // d}/{q // d}")
            p, q = p // d, q // d

    grid = raw.get("grid", {})
    n1 = n2 = 32
    if _check_keys(grid, SCHEMA["grid"], "grid", errs):
        n1 = _int(grid.get("N1", 32), "grid.N1", errs, minimum=4)
        n2 = _int(grid.get("N2", 32), "grid.N2", errs, minimum=4)

    tg = raw.get("theta_grid", {})
    m1 = m2 = 8
    if _check_keys(tg, SCHEMA["theta_grid"], "theta_grid", errs):
        m1 = _int(tg.get("M1", 8), "theta_grid.M1", errs, minimum=1)
        m2 = _int(tg.get("M2", 8), "theta_grid.M2", errs, minimum=1)

    bands = raw.get("bands")
    if bands is not None:
        bands = _int(bands, "bands", errs, minimum=1)
    elif p is not None:
        bands = 4 * max(abs(p), 1)

    pot_norm, potential_parts = _parse_potential(raw.get("potential", {}), errs)
    options = _parse_options(raw.get("options", {}), errs)

    if errs.problems:
        raise ConfigError(errs.problems)

    flux = make_flux(p, q, lattice)
    V = PotentialSpec.zero(lattice)
    for kind, payload in potential_parts:
        if kind == "modes":
            V = V + PotentialSpec(lattice, payload)
        elif kind == "random":
            V = V + random_potential(lattice, payload["seed"], payload["max_harmonic"], payload["amplitude"])
        else:
            V = V.shifted(payload)
    if not V.is_conjugate_symmetric():
        raise ConfigError([("potential.modes", "modes are not conjugate symmetric (V must be real)")])

    normalized = {
        "lattice": {"e1": list(lattice.e1), "e2": list(lattice.e2)},
        "flux": {"p": flux.p, "q": flux.q},
        "potential": pot_norm,
        "grid": {"N1": n1, "N2": n2},
        "theta_grid": {"M1": m1, "M2": m2},
        "bands": bands,
        "options": options,
    }
    return RunConfig(lattice, flux, V, (n1, n2), ThetaGrid(m1, m2), bands, options,
                     normalized, tuple(warnings))


def _parse_potential(section, errs):
    parts, norm = [], {}
    if not _check_keys(section, SCHEMA["potential"], "potential", errs):
        return norm, parts
    if "modes" in section:
        modes = []
        for i, entry in enumerate(section["modes"] or []):
            path = f"potential.modes[{i}]"
            if not isinstance(entry, (list, tuple)) or len(entry) not in (3, 4):
                errs.add(path, "expected [m1, m2, re] or [m1, m2, re, im]")
                continue
            m1 = _int(entry[0], path + "[0]", errs)
            m2 = _int(entry[1], path + "[1]", errs)
            re = _number(entry[2], path + "[2]", errs)
            im = _number(entry[3], path + "[3]", errs) if len(entry) == 4 else 0.0
            if None not in (m1, m2, re, im):
                modes.append((m1, m2, complex(re, im)))
        parts.append(("modes", tuple(modes)))
        norm["modes"] = [[m1, m2, c.real, c.imag] for m1, m2, c in modes]
    if "random" in section:
        spec = section["random"]
        if _check_keys(spec, RANDOM_KEYS, "potential.random", errs):
            seed = _int(spec.get("seed", 0), "potential.random.seed", errs)
            harm = _int(spec.get("max_harmonic", 2), "potential.random.max_harmonic", errs, minimum=0)
            amp = _number(spec.get("amplitude", 0.5), "potential.random.amplitude", errs, minimum=0)
            payload = {"seed": seed, "max_harmonic": harm, "amplitude": amp}
            parts.append(("random", payload))
            norm["random"] = payload
    if "constant" in section:
        c = _number(section["constant"], "potential.constant", errs)
        parts.append(("constant", c))
        norm["constant"] = c
    return norm, parts


def _parse_options(section, errs):
    opts = json.loads(json.dumps(DEFAULT_OPTIONS))
    if not _check_keys(section, SCHEMA["options"], "options", errs):
        return opts
    for key, value in section.items():
        path = f"options.{key}"
        if key == "threshold":
            opts[key] = None if value is None else _number(value, path, errs, minimum=1e-300)
        elif key in ("threshold_factor", "amplitude", "zero_tol", "grad_tol"):
            opts[key] = _number(value, path, errs, minimum=0)
        elif key in ("max_harmonic", "level", "algebra_samples", "seed", "q_max"):
            opts[key] = _int(value, path, errs, minimum=0)
        elif key == "t_values":
            vals = [_number(v, f"{path}[{i}]", errs) for i, v in enumerate(value or [])]
            if 0.0 not in vals:
                errs.add(path, "must include 0")
            opts[key] = vals
        elif key == "seeds":
            opts[key] = [_int(v, f"{path}[{i}]", errs) for i, v in enumerate(value or [])]
        elif key == "theta":
            opts[key] = _vec2(value, path, errs)
        elif key == "fractions":
            fr = []
            for i, pq in enumerate(value or []):
                pair = pq if isinstance(pq, (list, tuple)) and len(pq) == 2 else None
                if pair is None:
                    errs.add(f"{path}[{i}]", "expected [p, q]")
                    continue
                pp = _int(pair[0], f"{path}[{i}][0]", errs)
                qq = _int(pair[1], f"{path}[{i}][1]", errs, minimum=1)
                fr.append([pp, qq])
            opts[key] = fr
        elif key == "perturbation":
            if _check_keys(value, RANDOM_KEYS, path, errs):
                merged = dict(DEFAULT_OPTIONS["perturbation"])
                merged.update(value)
                _int(merged["seed"], path + ".seed", errs)
                _int(merged["max_harmonic"], path + ".max_harmonic", errs, minimum=1)
                _number(merged["amplitude"], path + ".amplitude", errs, minimum=0)
                opts[key] = merged
    return opts


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
