"""Scenario config files: flat ``key = value`` lines with dotted section paths.

Grammar (schema version 1)::

    file    := line*
    line    := blank | comment | entry
    comment := ws* "#" any*
    entry   := ws* key ws* "=" ws* value ws*
    key     := ident ("." ident)*          ident := [A-Za-z_][A-Za-z0-9_]*
    value   := one JSON value (number, true, false, null, "string", array)

Rules: ``schema_version = 1`` is required; each key may appear once;
``base = "<builtin name>"`` starts from a built-in scenario instead of the
defaults; every other key must name an existing config field. Profiles are
arrays of ``[time, value]`` pairs. Example::

    schema_version = 1
    base = "adapt-quarter"
    gains.Kp = 0.001
    load_profile = [[0.0, 0.0], [1.0, 12.0]]
"""

from __future__ import annotations

import dataclasses
import json
import re
from pathlib import Path

from imdrive.scenario import ScenarioConfig, get_builtin

SCHEMA_VERSION = 1
KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
NULLABLE = {"gains.T", "load_profile"}
PROFILES = {"speed_profile", "load_profile"}


class ConfigError(ValueError):
    """Malformed or invalid scenario config."""


class UnknownScenarioError(KeyError):
    pass


def _coerce(path: str, current, value):
    if value is None:
        if path in NULLABLE:
            return None
        raise ConfigError(f"{path}: null is not allowed")
    if path in PROFILES:
        if not isinstance(value, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(_is_number(v) for v in p) for p in value
        ):
            raise ConfigError(f"{path}: expected an array of [time, value] pairs")
        return tuple((float(a), float(b)) for a, b in value)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false")
        return value
    if isinstance(current, int) and not isinstance(current, bool):
        if not _is_number(value) or float(value) != int(value):
            raise ConfigError(f"{path}: expected an integer")
        return int(value)
    if isinstance(current, float) or (current is None and path == "gains.T"):
        if not _is_number(value):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise ConfigError(f"{path}: cannot assign a value to this field")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _flatten(obj, prefix=""):
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value):
            yield from _flatten(value, prefix + f.name + ".")
        else:
            yield prefix + f.name, value


def _build(cls, flat: dict, prefix=""):
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = prefix + f.name
        if key in flat:
            kwargs[f.name] = flat[key]
        else:
            sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
            if sub is not None and dataclasses.is_dataclass(sub):
                kwargs[f.name] = _build(sub, flat, key + ".")
    return cls(**kwargs)


def with_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Copy of ``cfg`` with dotted-path overrides applied and validated together.

    Unless ``load_profile`` is overridden it is re-derived from the (possibly
    overridden) motor and drive settings.
    """
    flat = dict(_flatten(cfg))
    for key, value in overrides.items():
        if key not in flat:
            raise ConfigError(f"unknown config key {key!r}")
        flat[key] = _coerce(key, flat[key], value)
    if "load_profile" not in overrides:
        flat["load_profile"] = None
    try:
        return _build(ScenarioConfig, flat)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> ScenarioConfig:
    entries: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value_text = line.partition("=")
        key = key.strip()
        if not sep or not KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            entries[key] = json.loads(value_text.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc.msg}") from None

    version = entries.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    base = entries.pop("base", None)
    if base is None:
        cfg = ScenarioConfig()
    elif not isinstance(base, str):
        raise ConfigError("base must be a string naming a built-in scenario")
    else:
        try:
            cfg = get_builtin(base)
        except KeyError:
            raise UnknownScenarioError(base) from None
    return with_overrides(cfg, entries)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize every field; ``parse_config(dump_config(c)) == c``."""
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for key, value in _flatten(cfg):
        if isinstance(value, tuple):
            value = [list(p) for p in value]
        lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"
