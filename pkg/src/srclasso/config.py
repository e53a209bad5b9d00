"""Flat ``key = value`` configuration files with ``#`` comments.

Parsing is strict: unknown keys and malformed values raise ConfigError
naming the key.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Callable, Mapping

from .exceptions import ConfigError


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key)
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def to_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def to_float(v: str) -> float:
    s = v.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    return float(s)


def to_int(v: str) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


def to_float_list(v: str) -> list[float]:
    return [to_float(x) for x in v.replace(";", ",").split(",") if x.strip()]


def coerce(raw: Mapping[str, Any], schema: Mapping[str, tuple[Callable, Any]]) -> dict[str, Any]:
    """Apply ``schema`` (key -> (converter, default)) to raw string values.

    Non-string values are passed through the converter only when they are
    strings, so already-typed mappings round-trip.
    """
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}", key=unknown[0])
    out = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            value = raw[key]
            if isinstance(value, str):
                try:
                    value = conv(value)
                except (TypeError, ValueError) as err:
                    raise ConfigError(f"bad value for {key!r}: {err}", key=key) from None
            out[key] = value
        else:
            out[key] = default
    return out
