"""Experiment configuration files.

Configs are YAML mappings with nested sections.  Every key is checked against
a fixed schema; unknown keys and bad values raise :class:`ConfigError` with
the file name and line of the offending entry.

Example::

    study: integration
    test: sup
    sigma: 1.0
    alpha: 0.05
    replications: 5000
    dictionary: {family: db6, j: 6}
    grid: {n: 32768}
    search: {target: 0.95}
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import yaml

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "STUDIES"]

STUDIES = ("integration", "convolution", "radon", "figure1", "coherence")


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` is ``source:line: message``."""

    def __init__(self, message: str, source: str = "<config>", line: Optional[int] = None):
        self.source = source
        self.line = line
        self.message = message
        loc = f"{source}:{line}" if line is not None else source
        super().__init__(f"{loc}: {message}")


# value checkers: each takes the raw value, returns the parsed one or raises ValueError


def _int(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}, got {v}")
        return v

    return check


def _float(lo=None, hi=None, open_lo=False, open_hi=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("must be finite")
        if lo is not None and (v < lo or (open_lo and v == lo)):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}, got {v}")
        if hi is not None and (v > hi or (open_hi and v == hi)):
            raise ValueError(f"must be {'<' if open_hi else '<='} {hi}, got {v}")
        return v

    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(map(str, options))}; got {v!r}")
        return v

    return check


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true or false, got {v!r}")
    return v


def _list_of(check, nonempty=True):
    def inner(v):
        if not isinstance(v, list) or (nonempty and not v):
            raise ValueError("expected a nonempty list")
        return [check(x) for x in v]

    return inner


def _delta_grid(v):
    if isinstance(v, dict):
        extra = set(v) - {"start", "stop", "num"}
        if extra or set(v) != {"start", "stop", "num"}:
            raise ValueError("delta_grid mapping needs exactly start, stop, num")
        start = _float(0)(v["start"])
        stop = _float(0)(v["stop"])
        num = _int(1)(v["num"])
        if num == 1:
            return [start]
        return [start + (stop - start) * i / (num - 1) for i in range(num)]
    return _list_of(_float(0))(v)


SECTIONS = {
    "dictionary": {"family": _str, "j": _int(0), "levels": _int(6)},
    "grid": {
        "n": _int(1),
        "image": _int(2),
        "t": _int(1),
        "theta": _int(1),
        "t_min": _float(),
        "t_max": _float(),
    },
    "kernel": {"C": _float(), "a": _float(0), "width": _float(0, open_lo=True)},
    "search": {
        "target": _float(0, 1, open_lo=True, open_hi=True),
        "delta_start": _float(0, open_lo=True),
        "delta_max": _float(0, open_lo=True),
        "rel_tol": _float(0, open_lo=True),
        "max_iter": _int(1),
    },
    "quantile": {"mc_draws": _int(10**4), "seed": _int(0)},
    "coherence": {"j_values": _list_of(_int(0)), "n_shifts": _int(1), "n": _int(8)},
    "scan": {"j_values": _list_of(_int(0))},
    "outputs": {"sinogram": _bool, "dictionary": _bool, "gram": _bool},
}

TOP = {
    "name": _str,
    "study": _choice(*STUDIES),
    "test": _choice("sup", "chi2"),
    "seed": _int(0),
    "sigma": _float(0, open_lo=True),
    "alpha": _float(0, 1, open_lo=True, open_hi=True),
    "field": _choice("real", "complex"),
    "replications": _int(1),
    "alternative": _choice("per_anomaly_mean", "uniform_sphere"),
    "mode": _choice("pairing", "grid"),
    "delta_grid": _delta_grid,
}


def _line_map(node, path=(), out=None):
    """Map key paths to 1-based line numbers from a composed YAML node tree."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _validate(raw: dict, lines: dict, source: str, prefix=(), allow_fast=True) -> dict:
    def err(path, msg):
        line = lines.get(path)
        while line is None and path:
            path = path[:-1]
            line = lines.get(path)
        return ConfigError(msg, source, line)

    if not isinstance(raw, dict):
        raise err(prefix, "expected a mapping")
    out = {}
    for key, val in raw.items():
        path = prefix + (key,)
        dotted = ".".join(map(str, path))
        if key == "fast" and allow_fast:
            out["fast"] = _validate(val, lines, source, path, allow_fast=False)
        elif key in TOP:
            try:
                out[key] = TOP[key](val)
            except ValueError as e:
                raise err(path, f"{dotted}: {e}") from None
        elif key in SECTIONS:
            if not isinstance(val, dict):
                raise err(path, f"{dotted}: expected a mapping")
            sec = {}
            for k2, v2 in val.items():
                p2 = path + (k2,)
                if k2 not in SECTIONS[key]:
                    raise err(p2, f"unknown key '{'.'.join(map(str, p2))}'")
                try:
                    sec[k2] = SECTIONS[key][k2](v2)
                except ValueError as e:
                    raise err(p2, f"{'.'.join(map(str, p2))}: {e}") from None
            out[key] = sec
        else:
            raise err(path, f"unknown key '{dotted}'")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings with study-specific defaults filled in."""

    study: str
    name: str = ""
    test: str = "sup"
    seed: int = 0
    sigma: float = 1.0
    alpha: float = 0.05
    field: str = "real"
    replications: int = 5000
    alternative: str = "per_anomaly_mean"
    mode: str = "pairing"
    delta_grid: tuple = ()
    dictionary: dict = dc_field(default_factory=dict)
    grid: dict = dc_field(default_factory=dict)
    kernel: dict = dc_field(default_factory=dict)
    search: dict = dc_field(default_factory=dict)
    quantile: dict = dc_field(default_factory=dict)
    coherence: dict = dc_field(default_factory=dict)
    scan: dict = dc_field(default_factory=dict)
    outputs: dict = dc_field(default_factory=dict)
    fast: bool = False

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["delta_grid"] = list(self.delta_grid)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=int(seed))


_RADON_FULL = {"image": 1024, "t": 1024, "theta": 360, "t_min": -1 / math.sqrt(2), "t_max": 1 / math.sqrt(2)}
_RADON_FAST = {"image": 256, "t": 256, "theta": 90}

DEFAULTS = {
    "integration": {
        "test": "sup",
        "dictionary": {"family": "db6", "j": 6, "levels": 12},
        "grid": {"n": 2**15},
        "search": {"target": 0.95},
    },
    "convolution": {
        "test": "chi2",
        "dictionary": {"family": "db6", "j": 6, "levels": 12},
        "grid": {"n": 2**12},
        "kernel": {"C": 1.0, "a": 1.0},
    },
    "radon": {
        "test": "chi2",
        "dictionary": {"family": "db4", "j": 3, "levels": 10},
        "grid": dict(_RADON_FULL),
        "search": {"target": 0.95},
        "fast": {"grid": dict(_RADON_FAST)},
    },
    # the j = 5 system does not fit in memory on the full grid, so the
    # default grid is the reduced one
    "figure1": {
        "test": "chi2",
        "sigma": 15.0,
        "replications": 1000,
        "delta_grid": [0.0, 264.0],
        "dictionary": {"family": "db4", "j": 5, "levels": 10},
        "grid": dict(_RADON_FULL, **_RADON_FAST),
    },
    "coherence": {
        "dictionary": {"family": "db6", "j": 5, "levels": 13},
        "kernel": {"width": 0.1},
        "coherence": {"j_values": [5, 6, 7, 8, 9], "n_shifts": 32, "n": 2**14},
    },
}

_SEARCH_DEFAULTS = {"target": 0.95, "delta_start": 1.0, "delta_max": 1e4, "rel_tol": 1e-3, "max_iter": 60}
_QUANTILE_DEFAULTS = {"mc_draws": 10**5, "seed": 0}
_OUTPUT_DEFAULTS = {"sinogram": False, "dictionary": False, "gram": False}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_config(text: str, source: str = "<config>", fast: bool = False) -> ExperimentConfig:
    """Parse and validate YAML text; ``fast`` applies the ``fast`` overrides."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}", source, line) from None
    if node is None or raw is None:
        raise ConfigError("empty configuration", source, 1)
    lines = _line_map(node)
    data = _validate(raw, lines, source)
    if "study" not in data:
        raise ConfigError("missing required key 'study'", source, 1)
    study = data["study"]
    merged = _merge(DEFAULTS[study], {k: v for k, v in data.items() if k != "fast"})
    fast_over = _merge(DEFAULTS[study].get("fast", {}), data.get("fast", {}))
    merged.pop("fast", None)
    if fast:
        merged = _merge(merged, fast_over)
    if "search" in merged:
        merged["search"] = _merge(_SEARCH_DEFAULTS, merged["search"])
    merged["quantile"] = _merge(_QUANTILE_DEFAULTS, merged.get("quantile", {}))
    merged["outputs"] = _merge(_OUTPUT_DEFAULTS, merged.get("outputs", {}))
    if merged.get("test") == "sup" and merged.get("alternative") == "uniform_sphere":
        raise ConfigError("the sup test is paired with per_anomaly_mean alternatives", source, lines.get(("alternative",)))
    if merged.get("test") == "chi2":
        merged.setdefault("alternative", "uniform_sphere")
    if merged.get("test") == "chi2" and merged["alternative"] != "uniform_sphere":
        raise ConfigError("the chi2 test is paired with uniform_sphere alternatives", source, lines.get(("alternative",)))
    if study in ("radon", "figure1"):
        g = merged["grid"]
        if g["t_min"] >= g["t_max"]:
            raise ConfigError("grid.t_min must be below grid.t_max", source, lines.get(("grid", "t_min")))
    merged["delta_grid"] = tuple(merged.get("delta_grid", ()))
    return ExperimentConfig(fast=bool(fast), **merged)


def load_config(path, fast: bool = False) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, str(path), fast)
