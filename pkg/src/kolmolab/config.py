"""TOML configuration with an explicit, versioned schema.

Every section and key is declared below; anything else is an error.  Values
are type-checked and missing keys take their declared defaults, so a config
file only needs to mention what it changes.
"""

from __future__ import annotations

import copy
import sys
from pathlib import Path
from typing import Any, Dict

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

SCHEMA_VERSION = 1

EXPERIMENTS = ("coercivity", "linear-euler", "resolvent", "quasilinear", "dns")

_NUM = (int, float)

# section -> key -> (accepted types, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "suite": {
        "experiments": (list, []),
    },
    "coercivity": {
        "k_set": (list, [float(k) for k in range(2, 81, 2)]),
        "n_max": (int, 500),
        "s_grid": (list, [round(0.05 * i, 10) for i in range(9)]),
        "matrix_k": (list, [2.0, 4.0]),
        "matrix_s": (list, [0.0, 0.2, 0.4]),
        "N": (int, 128),
        "operators_k": (_NUM, 2.0),
        "margin": (int, 8),
    },
    "linear_euler": {
        "k": (_NUM, 2.0),
        "Ny": (int, 512),
        "t_end": (_NUM, 100.0),
        "preset": (str, "smooth"),
        "seed": (int, 0),
        "window": (list, [10.0, 100.0]),
        "residual_t": (_NUM, 5.0),
        "residual_dts": (list, [0.1, 0.05, 0.025]),
        "green_t": (list, [100.0, 10000.0]),
        "green_points": (int, 41),
    },
    "resolvent": {
        "k_set": (list, [2.0, 4.0, 6.0, 10.0, 14.0, 20.0]),
        "lambda_min": (_NUM, -1.5),
        "lambda_max": (_NUM, 1.5),
        "lambda_count": (int, 13),
        "eps_list": (list, [1e-1, 1e-2, 1e-3, 1e-4]),
        "nu_list": (list, [1e-1, 1e-2, 1e-3]),
        "N": (list, [128, 256]),
    },
    "quasilinear": {
        "nu": (_NUM, 1e-3),
        "Ny": (int, 128),
        "dt": (_NUM, 0.05),
        "n_eval": (int, 12),
    },
    "dns": {
        "kappa": (_NUM, 0.5),
        "Nx": (int, 32),
        "Ny": (int, 256),
        "nu": (_NUM, 2e-3),
        "t_end": (_NUM, 500.0),
        "cfl": (_NUM, 0.4),
        "max_dt": (_NUM, 0.05),
        "pattern": (str, "mode21"),
        "amplitude_multiplier": (_NUM, 1e-3),
        "seed": (int, 0),
        "output_stride": (int, 10),
        "acceptance": (bool, True),
        "run": (bool, True),
    },
    "dns.scan": {
        "nu_list": (list, []),
        "multipliers": (list, []),
        "t_end": (_NUM, 0.0),
        "Nx": (int, 16),
        "Ny": (int, 128),
    },
}

SECTION_FOR = {
    "coercivity": "coercivity",
    "linear-euler": "linear_euler",
    "resolvent": "resolvent",
    "quasilinear": "quasilinear",
    "dns": "dns",
}


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message names the line or key."""


def defaults() -> Dict[str, Any]:
    out: Dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    for section, keys in SCHEMA.items():
        target = out
        parts = section.split(".")
        for p in parts[:-1]:
            target = target.setdefault(p, {})
        target[parts[-1]] = {k: copy.deepcopy(v[1]) for k, v in keys.items()}
    return out


def _check_value(path: str, value, types) -> None:
    # bool is a subclass of int, so reject it explicitly for numeric keys
    if isinstance(value, bool) and types is not bool:
        raise ConfigError(f"key '{path}': expected {_type_name(types)}, got a boolean")
    if not isinstance(value, types):
        raise ConfigError(f"key '{path}': expected {_type_name(types)}, got {type(value).__name__}")


def _type_name(types) -> str:
    if isinstance(types, tuple):
        return "a number"
    return {list: "an array", str: "a string", bool: "a boolean", int: "an integer"}.get(types, types.__name__)


def validate(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Merge ``raw`` onto the defaults, rejecting unknown sections and keys."""
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"key 'schema_version': unsupported version {version!r} (expected {SCHEMA_VERSION})")
    merged = defaults()
    for section, body in raw.items():
        if section == "schema_version":
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section '{section}' (known: {', '.join(sorted(SCHEMA))})")
        if not isinstance(body, dict):
            raise ConfigError(f"key '{section}' must be a table")
        for key, value in body.items():
            path = f"{section}.{key}"
            if isinstance(value, dict) and path in SCHEMA:
                for sub, sv in value.items():
                    spath = f"{path}.{sub}"
                    if sub not in SCHEMA[path]:
                        raise ConfigError(f"unknown key '{spath}'")
                    _check_value(spath, sv, SCHEMA[path][sub][0])
                    merged[section][key][sub] = sv
                continue
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{path}'")
            _check_value(path, value, SCHEMA[section][key][0])
            merged[section][key] = value
    for name in merged["suite"]["experiments"]:
        if name not in EXPERIMENTS:
            raise ConfigError(f"key 'suite.experiments': unknown experiment {name!r} (known: {', '.join(EXPERIMENTS)})")
    return merged


def loads(text: str) -> Dict[str, Any]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    return validate(raw)


def load(path: str | Path | None) -> Dict[str, Any]:
    if path is None:
        return defaults()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        return loads(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
