"""Plain-text ``key = value`` solver configuration.

Blank lines and ``#`` comments are ignored. Keys shared by both solvers
(``eps_regret``, ``seed``) apply to each; unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

from .errors import ParseError, ValidationError
from .global_solver import GlobalConfig
from .local_solver import LocalConfig

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def parse_config(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno, 1)
        key = key.strip()
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, 1)
        values[key] = value.strip()
    unknown = set(values) - known_keys()
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return values


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def known_keys() -> set[str]:
    return {f.name for f in fields(GlobalConfig)} | {f.name for f in fields(LocalConfig)}


def _coerce(kind, key: str, value: str):
    try:
        if kind is bool or kind == "bool":
            return _BOOL[value.lower()]
        if kind in (int, "int"):
            return int(value)
        if kind in (float, "float"):
            return float(value)
    except (KeyError, ValueError):
        raise ValidationError(f"bad value {value!r} for {key!r}") from None
    return value


def _apply(cls, base, values: dict[str, str]):
    changes = {}
    for f in fields(cls):
        if f.name in values:
            changes[f.name] = _coerce(f.type, f.name, values[f.name])
    return replace(base, **changes)


def global_config(values: dict[str, str], base: GlobalConfig = GlobalConfig()) -> GlobalConfig:
    return _apply(GlobalConfig, base, values)


def local_config(values: dict[str, str], base: LocalConfig = LocalConfig()) -> LocalConfig:
    return _apply(LocalConfig, base, values)
