"""Flat ``key = value`` scenario configuration.

Grammar, one entry per line::

    # comment (also allowed after a value)
    key = value
    key = 1.0, 2.0, 3.0        # list
    key = linspace(0, 5.16, 10) # evenly spaced list, endpoints included

Values are numbers, booleans (true/false), bare strings or lists of numbers.
Keys carry their physical unit in the name (``t2star_us``,
``delta_rad_per_us``). Unknown and duplicate keys are fatal. ``seed`` must be
given, either in the file or on the command line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

SCENARIOS = (
    "ramsey_qfi_vs_time",
    "ramsey_qfi_vs_phi",
    "ghz_sweep",
    "manybody_scaling",
    "manybody_time_evolution",
    "estimate_from_records",
)


class ConfigError(ValueError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Key:
    kind: str  # int, float, str, bool, floats, ints
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all(pred):
    return lambda xs: len(xs) > 0 and all(pred(x) for x in xs)


def _linspace(a: float, b: float, n: int) -> list:
    return [float(x) for x in np.linspace(a, b, n)]


_DELTA = 2 * math.pi * 1.459  # rad/us
_T2 = 2.58  # us

COMMON = {
    "scenario": Key("str", None, lambda s: s in SCENARIOS, "one of " + ", ".join(SCENARIOS)),
    "seed": Key("int", None, _nonneg, ">= 0"),
    "output_path": Key("str", ""),
    "ensemble": Key(
        "str",
        "haar_local_product",
        lambda s: s in ("haar_local_product", "haar_single_qubit_euler", "hamiltonian_evolution"),
        "haar_local_product, haar_single_qubit_euler or hamiltonian_evolution",
    ),
    "n_unitaries": Key("int", 400, _pos, "> 0"),
    "shots": Key("int", 0, _nonneg, ">= 0 (0 = exact probabilities)"),
    "n_bootstrap": Key("int", 500, _nonneg, ">= 0"),
}

FIT = {
    "dtheta_grid_rad": Key("floats", _linspace(0.05, 0.4, 8), _all(_pos), "positive"),
    "fit_max_power": Key("int", 4, lambda p: p >= 2, ">= 2"),
}

RAMSEY = {
    "ensemble": Key(
        "str",
        "haar_single_qubit_euler",
        lambda s: s in ("haar_local_product", "haar_single_qubit_euler"),
        "haar_local_product or haar_single_qubit_euler",
    ),
    "delta_rad_per_us": Key("float", _DELTA, _pos, "> 0"),
    "t2star_us": Key("float", _T2, _pos, "> 0"),
}

MANYBODY = {
    "ensemble": Key("str", "hamiltonian_evolution", lambda s: s == "hamiltonian_evolution", "hamiltonian_evolution"),
    "coupling_g_per_T": Key("float", 1.0, _pos, "> 0"),
    "omega_per_T": Key("float", 1.0, _nonneg, ">= 0"),
    "disorder_std_per_T": Key("float", 1.0, _nonneg, ">= 0"),
    "alpha_exp": Key("float", 1.5, lambda a: 0 < a < 3, "in (0, 3)"),
    "segments_K": Key("int", 20, _pos, "> 0"),
    "segment_time_T": Key("float", 1.0, _pos, "> 0"),
    "dtheta_rad": Key("float", 0.1, _pos, "> 0"),
    "gamma_per_g": Key("floats", [0.0, 0.01], _all(_nonneg), ">= 0"),
}

SCENARIO_KEYS = {
    "ramsey_qfi_vs_time": {
        **FIT,
        **RAMSEY,
        "phi_rad": Key("float", math.pi / 2),
        "times_us": Key("floats", _linspace(0.0, 2 * _T2, 10), _all(_nonneg), ">= 0"),
    },
    "ramsey_qfi_vs_phi": {
        **FIT,
        **RAMSEY,
        "phi_grid_rad": Key("floats", _linspace(0.0, math.pi, 9)),
        "t_fixed_us": Key("float", 3 * math.pi / (2 * _DELTA), _nonneg, ">= 0"),
    },
    "ghz_sweep": {
        **FIT,
        "n_qubits": Key("int", 4, lambda n: 1 <= n <= 10, "in [1, 10]"),
        "preparation": Key("str", "circuit", lambda s: s in ("circuit", "product"), "circuit or product"),
        "theta0_rad": Key("float", 0.0),
        "dephasing_coherence": Key("float", 1.0, lambda c: 0 <= c <= 1, "in [0, 1] (synthetic noise knob)"),
    },
    "manybody_scaling": {
        **MANYBODY,
        "n_qubits_list": Key("ints", [2, 3, 4, 5, 6, 7, 8], _all(lambda n: 1 <= n <= 10), "in [1, 10]"),
        "epsilon": Key("float", 0.09, lambda e: 0 < e <= 1, "in (0, 1]"),
        "repetitions": Key("int", 20, lambda r: r >= 1, ">= 1"),
        "n_min": Key("int", 1, _pos, "> 0"),
        "n_ceiling": Key("int", 1 << 15, _pos, "> 0"),
        "mixed_time_T": Key("float", 10.0, _nonneg, ">= 0"),
    },
    "manybody_time_evolution": {
        **MANYBODY,
        "n_unitaries": Key("int", 1000, _pos, "> 0"),
        "n_qubits": Key("int", 8, lambda n: 1 <= n <= 10, "in [1, 10]"),
        "times_T": Key("floats", _linspace(0.0, 100.0, 20), _all(_nonneg), ">= 0"),
    },
    "estimate_from_records": {
        "records_path": Key("str", None),
        "fit_max_power": Key("int", 4, lambda p: p >= 2, ">= 2"),
    },
}

_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^,]+)\)$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _number(text: str) -> float:
    return float(text)


def _coerce(kind: str, raw: str):
    raw = raw.strip()
    if kind == "str":
        if not raw:
            raise ValueError("empty value")
        return raw
    if kind == "bool":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError("expected true or false")
        return low == "true"
    if kind == "int":
        return int(raw)
    if kind == "float":
        return _number(raw)
    if kind in ("floats", "ints"):
        m = _LINSPACE.match(raw)
        if m:
            a, b, n = _number(m.group(1)), _number(m.group(2)), int(m.group(3))
            if n < 1:
                raise ValueError("linspace needs at least one point")
            vals = _linspace(a, b, n)
        else:
            vals = [_number(p) for p in raw.split(",") if p.strip()]
        if kind == "ints":
            ints = [int(v) for v in vals]
            if ints != vals:
                raise ValueError("expected integers")
            return ints
        return vals
    raise AssertionError(kind)


def parse_text(text: str, path: str = "<config>") -> dict:
    """Raw key -> (value string, line number) with syntax checks only."""
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", path, lineno)
        key, value = (p.strip() for p in body.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", path, lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first on line {entries[key][1]})", path, lineno)
        entries[key] = (value, lineno)
    return entries


def resolve(entries: dict, path: str = "<config>", overrides: Optional[dict] = None) -> dict:
    """Validate raw entries against the scenario schema and fill defaults."""
    overrides = overrides or {}
    if "scenario" not in entries and "scenario" not in overrides:
        raise ConfigError("missing required key 'scenario'", path)
    scen_raw = overrides.get("scenario", entries.get("scenario", ("", None))[0])
    if scen_raw not in SCENARIOS:
        line = entries.get("scenario", (None, None))[1]
        raise ConfigError(f"unknown scenario {scen_raw!r}; expected one of {', '.join(SCENARIOS)}", path, line)
    schema = {**COMMON, **SCENARIO_KEYS[scen_raw]}
    for key, (_, lineno) in entries.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for scenario {scen_raw}", path, lineno)
    cfg = {}
    for key, spec in schema.items():
        if key in overrides:
            value, lineno = overrides[key], None
        elif key in entries:
            raw, lineno = entries[key]
            try:
                # optional text keys may be left blank, as echo writes them
                value = "" if (raw == "" and spec.default == "") else _coerce(spec.kind, raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", path, lineno) from None
        elif spec.default is None:
            raise ConfigError(f"missing required key {key!r}", path)
        else:
            value, lineno = spec.default, None
        if spec.check is not None and not spec.check(value):
            raise ConfigError(f"{key} = {value!r} out of range: must be {spec.rule}", path, lineno)
        cfg[key] = value
    if "dtheta_grid_rad" in cfg:
        grid = cfg["dtheta_grid_rad"]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("dtheta_grid_rad must be strictly increasing", path, entries.get("dtheta_grid_rad", (0, None))[1])
    return cfg


def load_config(path, overrides: Optional[dict] = None) -> dict:
    """Read, validate and default a config file; ``overrides`` win over the file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"{path}: {exc.strerror or exc}") from exc
    return resolve(parse_text(text, str(path)), str(path), overrides)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def echo(cfg: dict) -> str:
    """The fully resolved config in the same grammar, keys sorted."""
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))
