"""Run configuration: TOML text to a fully resolved :class:`RunConfig`.

Sections are ``[grid]``, ``[params]``, ``[forcing]`` (with an optional
``[forcing.nonzonal]`` table), ``[integrator]``, ``[initial]``,
``[experiment]``, ``[constants]`` and ``[output]``.  Every key is checked
against a per-section schema; unknown keys, missing required keys, type
mismatches and out-of-range values raise :class:`ConfigError` naming the line.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import IntegratorConfig, PhysicalParams
from .forcing import Algebraic, Analytic, BandLimited, ForcingSpec, NonZonal
from .spectral import DimensionError, DomainError, GridSpec
from .thresholds import Constants

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "EXPERIMENT_KINDS"]

EXPERIMENT_KINDS = ("simulate", "sync-modes", "sync-nodes", "thresholds", "sweep", "check-bounds")
_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


# key -> (type, default); type is one of float, int, bool, str, "floats", "ints"
_COMMON = {
    "grid": {"L": (float, 2 * math.pi), "n": (int, 64)},
    "params": {"mu": (float, _REQUIRED), "epsilon": (float, _REQUIRED)},
    "forcing": {
        "class": (str, "none"), "G0": (float, 0.0), "alpha": (float, None),
        "s": (float, None), "kappa_f": (float, None), "phase_seed": (int, None),
    },
    "forcing.nonzonal": {
        "amplitude": (float, _REQUIRED), "kmin": (float, 1.0), "kmax": (float, 4.0),
        "slope": (float, 0.0), "seed": (int, 0),
    },
    "integrator": {
        "dt": (float, None), "scheme": (str, "ifrk4"), "cfl": (float, 0.5),
        "enforce_symmetry": (bool, False),
    },
    "initial": {
        "seed": (int, 1), "amplitude": (float, 1.0), "kmin": (float, 1.0),
        "kmax": (float, 8.0), "y_antisymmetric": (bool, True), "snapshot": (str, None),
    },
    "constants": {name: (float, 1.0) for name in
                  ("c", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9",
                   "c_star", "c_alpha", "c_eta")},
    "output": {"dir": (str, "."), "series": (str, "series.ndjson"), "snapshot": (str, None)},
}

_SYNC = {
    "T": (float, _REQUIRED), "burn_in": (float, _REQUIRED), "cadence": (float, None),
    "seeds": ("ints", [1, 2]), "tol_converged": (float, 1e-6), "tol_diverged": (float, 1e-1),
}

_EXPERIMENT = {
    "simulate": {"T": (float, _REQUIRED), "cadence": (float, _REQUIRED),
                 "kappa_f": (float, None)},
    "sync-modes": {**_SYNC, "kappa": (float, _REQUIRED), "coupling": (str, "replace"),
                   "lam": (float, 1.0)},
    "sync-nodes": {**_SYNC, "N": (int, _REQUIRED), "lam": (float, _REQUIRED)},
    "thresholds": {"family": (str, "both"), "G0": (float, None), "G1": (float, None),
                   "G2": (float, None), "G3": (float, None), "M0": (float, None)},
    "sweep": {**_SYNC, "sweep": (str, _REQUIRED), "family": (str, "modes"),
              "values": ("floats", None), "lam": (float, 1.0), "N": (int, 16),
              "eps_list": ("floats", None)},
    "check-bounds": {"T": (float, _REQUIRED), "cadence": (float, _REQUIRED),
                     "kappa_f": (float, None)},
}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Map ``(table, key)`` to the line where it is assigned (best effort)."""
    out: dict[tuple[str, str], int] = {}
    table = ""
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-\s\"]+?)\s*\]\s*(#.*)?$")
    assign = re.compile(r"^\s*([A-Za-z0-9_\-\"]+)\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            table = m.group(1).replace('"', "").replace(" ", "")
            out.setdefault((table, ""), i)
            continue
        m = assign.match(line)
        if m:
            out.setdefault((table, m.group(1).strip('"')), i)
    return out


class _Reader:
    def __init__(self, text: str, data: dict):
        self.lines = _key_lines(text)
        self.data = data

    def line(self, table: str, key: str = "") -> int | None:
        return self.lines.get((table, key), self.lines.get((table, "")))

    def section(self, table: str, schema: dict, mapping: dict | None = None,
                skip: tuple[str, ...] = ()) -> dict:
        if mapping is None:
            mapping = self.data.get(table, {})
        if not isinstance(mapping, dict):
            raise ConfigError(f"[{table}] must be a table", self.line(table))
        for key in mapping:
            if key not in schema and key not in skip:
                raise ConfigError(f"unknown key {key!r} in [{table}]", self.line(table, key))
        out = {}
        for key, (typ, default) in schema.items():
            if key in mapping:
                out[key] = self._coerce(table, key, typ, mapping[key])
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key {key!r} in [{table}]", self.line(table))
            else:
                out[key] = default
        return out

    def _coerce(self, table, key, typ, value):
        ln = self.line(table, key)

        def bad(expected):
            return ConfigError(f"[{table}] {key} must be {expected}, got {value!r}", ln)

        if typ is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise bad("a number")
            return float(value)
        if typ is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise bad("an integer")
            return value
        if typ is bool:
            if not isinstance(value, bool):
                raise bad("a boolean")
            return value
        if typ is str:
            if not isinstance(value, str):
                raise bad("a string")
            return value
        if typ in ("floats", "ints"):
            if not isinstance(value, list):
                raise bad("an array")
            want = int if typ == "ints" else (int, float)
            for v in value:
                if isinstance(v, bool) or not isinstance(v, want):
                    raise bad("an array of " + ("integers" if typ == "ints" else "numbers"))
            return [int(v) for v in value] if typ == "ints" else [float(v) for v in value]
        raise AssertionError(typ)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration.  ``resolved`` is the canonical nested mapping."""

    kind: str
    grid: GridSpec
    params: PhysicalParams
    forcing: ForcingSpec | None
    integrator: IntegratorConfig
    constants: Constants
    initial: dict
    experiment: dict
    output: dict
    resolved: dict = field(repr=False)

    def to_json(self) -> str:
        return json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        """Override the initial-condition seed (and sync seeds ``seed, seed+1``)."""
        resolved = json.loads(self.to_json())
        resolved["initial"]["seed"] = int(seed)
        if "seeds" in resolved["experiment"]:
            resolved["experiment"]["seeds"] = [int(seed), int(seed) + 1]
        return _build(resolved, _Reader("", resolved))


def _wrap(reader: _Reader, table: str, key: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DomainError, DimensionError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), reader.line(table, key)) from None


def _build(resolved: dict, r: _Reader) -> RunConfig:
    g = resolved["grid"]
    grid = _wrap(r, "grid", "n", GridSpec, g["L"], g["n"])
    p = resolved["params"]
    params = _wrap(r, "params", "mu", PhysicalParams.for_grid, grid, p["mu"], p["epsilon"])
    fz = resolved["forcing"]
    cls = fz["class"].lower().replace("-", "_")
    forcing = None
    if cls != "none":
        if cls == "analytic":
            if fz["alpha"] is None:
                raise ConfigError("analytic forcing needs 'alpha'", r.line("forcing"))
            zc = _wrap(r, "forcing", "alpha", Analytic, fz["alpha"])
        elif cls == "algebraic":
            if fz["s"] is None:
                raise ConfigError("algebraic forcing needs 's'", r.line("forcing"))
            zc = _wrap(r, "forcing", "s", Algebraic, fz["s"])
        elif cls in ("band_limited", "bandlimited"):
            if fz["kappa_f"] is None:
                raise ConfigError("band-limited forcing needs 'kappa_f'", r.line("forcing"))
            zc = _wrap(r, "forcing", "kappa_f", BandLimited, fz["kappa_f"])
        else:
            raise ConfigError(f"unknown forcing class {fz['class']!r}", r.line("forcing", "class"))
        nz = None
        if fz.get("nonzonal") is not None:
            q = fz["nonzonal"]
            nz = _wrap(r, "forcing.nonzonal", "amplitude", NonZonal, q["amplitude"], q["kmin"],
                       q["kmax"], q["slope"], q["seed"])
        forcing = _wrap(r, "forcing", "G0", ForcingSpec, zc, fz["G0"], grid, params,
                        fz["phase_seed"], nz)
    elif fz.get("nonzonal") is not None:
        raise ConfigError("[forcing.nonzonal] requires a zonal forcing class", r.line("forcing.nonzonal"))
    it = resolved["integrator"]
    if it["dt"] is not None and not it["dt"] > 0:
        raise ConfigError("dt must be positive", r.line("integrator", "dt"))
    integrator = _wrap(r, "integrator", "scheme", IntegratorConfig, it["dt"], it["scheme"],
                       it["enforce_symmetry"], True, it["cfl"])
    constants = _wrap(r, "constants", "", Constants, **resolved["constants"])
    ex = resolved["experiment"]
    kind = ex["kind"]
    _check_experiment(kind, ex, r)
    return RunConfig(kind, grid, params, forcing, integrator, constants,
                     dict(resolved["initial"]), dict(ex), dict(resolved["output"]), resolved)


def _check_experiment(kind: str, ex: dict, r: _Reader):
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(msg, r.line("experiment", key))

    if "T" in ex:
        need(ex["T"] > 0, "T", "T must be positive")
    if "cadence" in ex and ex["cadence"] is not None:
        need(ex["cadence"] > 0, "cadence", "cadence must be positive")
    if "burn_in" in ex:
        need(0 <= ex["burn_in"] < ex["T"], "burn_in", "need 0 <= burn_in < T")
    if "seeds" in ex:
        need(len(ex["seeds"]) == 2, "seeds", "seeds must hold two integers")
    if kind == "sync-modes":
        need(ex["kappa"] >= 0, "kappa", "kappa must be nonnegative")
        need(ex["coupling"] in ("replace", "nudge"), "coupling", "coupling must be 'replace' or 'nudge'")
    if kind in ("sync-nodes", "sweep") and "N" in ex:
        m = math.isqrt(ex["N"]) if ex["N"] > 0 else 0
        need(m * m == ex["N"] and ex["N"] > 0, "N", "N must be a positive perfect square")
    if kind == "thresholds":
        need(ex["family"] in ("modes", "nodes", "both"), "family", "family must be modes, nodes or both")
    if kind == "sweep":
        need(ex["sweep"] in ("threshold", "zonalization"), "sweep",
             "sweep must be 'threshold' or 'zonalization'")
        if ex["sweep"] == "threshold":
            need(ex["family"] in ("modes", "nodes"), "family", "family must be modes or nodes")
            need(bool(ex["values"]), "values", "threshold sweep needs 'values'")
        else:
            need(bool(ex["eps_list"]), "eps_list", "zonalization sweep needs 'eps_list'")


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML configuration text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed configuration: {exc}", int(m.group(1)) if m else None) from None
    r = _Reader(text, data)
    known = {"grid", "params", "forcing", "integrator", "initial", "experiment", "constants", "output"}
    for table in data:
        if table not in known:
            raise ConfigError(f"unknown section [{table}]", r.line(table))
    resolved: dict[str, Any] = {}
    for table in ("grid", "params", "integrator", "initial", "constants", "output"):
        resolved[table] = r.section(table, _COMMON[table])
    if "params" not in data:
        raise ConfigError("missing section [params]")
    fz_raw = data.get("forcing", {})
    resolved["forcing"] = r.section("forcing", _COMMON["forcing"], fz_raw, skip=("nonzonal",))
    if "nonzonal" in fz_raw:
        resolved["forcing"]["nonzonal"] = r.section(
            "forcing.nonzonal", _COMMON["forcing.nonzonal"], fz_raw["nonzonal"])
    else:
        resolved["forcing"]["nonzonal"] = None
    ex_raw = data.get("experiment")
    if ex_raw is None:
        raise ConfigError("missing section [experiment]")
    kind = ex_raw.get("kind")
    if kind is None:
        raise ConfigError("missing required key 'kind' in [experiment]", r.line("experiment"))
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}", r.line("experiment", "kind"))
    ex = r.section("experiment", _EXPERIMENT[kind], ex_raw, skip=("kind",))
    ex["kind"] = kind
    resolved["experiment"] = ex
    return _build(resolved, r)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_dict(cfg: RunConfig) -> dict:
    """The canonical resolved mapping (deep copy)."""
    return json.loads(cfg.to_json())

