"""Plain-text experiment configuration: ``key = value`` lines.

Blank lines and ``#`` comments are ignored. ``[name]`` starts a section;
sections are used by the uniqueness runner for its scenario list. Values
are typed against a per-subcommand schema, and every error names the
offending line.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .exceptions import PreconditionViolation
from .expressions import ExpressionError, compile_expression

__all__ = ["ConfigError", "ConfigFile", "Key", "parse_config", "load_config", "resolve"]


class ConfigError(PreconditionViolation):
    pass


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.\-]+)\s*\]$")


@dataclass
class ConfigFile:
    values: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    # (section or None, key) -> line number
    lines: dict = field(default_factory=dict)
    source: str = "<string>"
    sha256: str = ""


def parse_config(text: str, source: str = "<string>") -> ConfigFile:
    cfg = ConfigFile(source=source, sha256=hashlib.sha256(text.encode()).hexdigest())
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current in cfg.sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{current}]")
            cfg.sections[current] = {}
            continue
        m = _LINE.match(line)
        if not m or not m.group(2):
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1), m.group(2)
        target = cfg.values if current is None else cfg.sections[current]
        if key in target:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        target[key] = value
        cfg.lines[(current, key)] = lineno
    return cfg


def load_config(path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


@dataclass(frozen=True)
class Key:
    convert: Callable[[str], Any]
    default: Any = None
    help: str = ""


def as_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def choice(*options) -> Callable[[str], str]:
    def conv(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s

    return conv


def expression(variable: str = "x") -> Callable[[str], Callable]:
    return lambda s: compile_expression(s, variable)


def optional(conv: Callable) -> Callable:
    return lambda s: None if s.strip().lower() in ("none", "") else conv(s)


def resolve(raw: dict, schema: dict, cfg: Optional[ConfigFile] = None, section=None,
            context: str = "") -> dict:
    """Convert raw strings through ``schema``; fill defaults for absent keys."""
    src = cfg.source if cfg is not None else "<config>"
    where = lambda k: f"{src}:{cfg.lines.get((section, k), '?')}" if cfg is not None else src
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        k = unknown[0]
        raise ConfigError(
            f"{where(k)}: unknown key {k!r}{context}; valid keys: {', '.join(sorted(schema))}"
        )
    out = {}
    for k, spec in schema.items():
        if k in raw:
            try:
                out[k] = spec.convert(raw[k])
            except ExpressionError as exc:
                raise ConfigError(f"{where(k)}: key {k!r}: {exc}") from None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where(k)}: key {k!r}: cannot use {raw[k]!r} ({exc})") from None
        else:
            out[k] = spec.convert(spec.default) if isinstance(spec.default, str) else spec.default
    return out
