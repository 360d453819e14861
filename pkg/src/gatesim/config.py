"""Ini-style run configuration (.ini files).

Sections hold run settings plus parameter assignments keyed by
hierarchical patterns. In a pattern, ``*`` matches exactly one path
segment and ``**`` matches any number (including zero); the first
matching assignment in file order wins. Sections inherit from General
(or an explicit parent via ``[Name:Parent]``), child entries taking
precedence over inherited ones.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError, DuplicateSection, ParseError
from .simtime import SimTime

#: Run settings recognized in any section; everything with a dot or a
#: wildcard is a parameter assignment instead.
SCALAR_KEYS = frozenset({
    "network", "sim-time-limit", "event-limit", "seed",
    "guest-runtime-path", "guest-module-path", "guest-sdk-check",
})


@dataclass
class Assignment:
    pattern: str
    segments: tuple[str, ...]
    value: str
    line: int


@dataclass
class Section:
    name: str
    parent: Optional[str]
    settings: dict[str, str] = field(default_factory=dict)
    assignments: list[Assignment] = field(default_factory=list)


@dataclass
class Config:
    sections: dict[str, Section] = field(default_factory=dict)

    def effective(self, name: str = "General") -> "EffectiveConfig":
        """Resolve a section and its inheritance chain."""
        if name not in self.sections and name != "General":
            raise ConfigError(f"no section [{name}] in configuration")
        chain: list[Section] = []
        seen: set[str] = set()
        cursor: Optional[str] = name
        while cursor is not None:
            if cursor in seen:
                raise ConfigError(f"section inheritance cycle at [{cursor}]")
            seen.add(cursor)
            section = self.sections.get(cursor)
            if section is not None:
                chain.append(section)
                cursor = section.parent
            elif cursor != "General":
                raise ConfigError(f"section [{cursor}] extends unknown parent")
            else:
                cursor = None
        return EffectiveConfig.from_chain(name, chain)


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _validate_setting(key: str, value: str, lineno: int):
    try:
        if key == "sim-time-limit":
            SimTime.parse(value)
        elif key in ("event-limit", "seed"):
            int(value, 0)
        elif key == "guest-sdk-check" and value not in ("strict", "off"):
            raise ConfigError(
                f"guest-sdk-check must be 'strict' or 'off', got '{value}'")
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc


def parse_config(text: str) -> Config:
    """Parse ini text into a Config, validating known settings eagerly."""
    config = Config()
    current: Optional[Section] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno, 1)
            header = line[1:-1].strip()
            if ":" in header:
                name, parent = (part.strip() for part in header.split(":", 1))
            else:
                name, parent = header, None
            if not name:
                raise ParseError("empty section name", lineno, 1)
            if parent is None and name != "General":
                parent = "General"
            if name in config.sections:
                raise DuplicateSection(f"section [{name}] declared twice")
            current = Section(name, parent)
            config.sections[name] = current
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got '{line}'",
                             lineno, 1, ("'='",))
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("missing key before '='", lineno, 1)
        if current is None:
            raise ConfigError(
                f"line {lineno}: '{key}' appears before any [Section] header")
        if "." in key or "*" in key:
            segments = tuple(key.split("."))
            if any(not seg for seg in segments):
                raise ConfigError(f"line {lineno}: empty segment in "
                                  f"pattern '{key}'")
            current.assignments.append(
                Assignment(key, segments, value, lineno))
        elif key in SCALAR_KEYS:
            if key in current.settings:
                raise ConfigError(
                    f"line {lineno}: '{key}' set twice in [{current.name}]")
            _validate_setting(key, value, lineno)
            current.settings[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown setting '{key}' "
                              f"(parameter patterns need a '.')")
    return config


def segments_match(pattern: tuple[str, ...], target: tuple[str, ...]) -> bool:
    """Match pattern segments against path segments ('*' one, '**' any)."""
    if not pattern:
        return not target
    head = pattern[0]
    if head == "**":
        return any(segments_match(pattern[1:], target[i:])
                   for i in range(len(target) + 1))
    if not target:
        return False
    if head == "*" or head == target[0]:
        return segments_match(pattern[1:], target[1:])
    return False


@dataclass
class EffectiveConfig:
    """A section with its inheritance flattened, ready for elaboration."""

    section: str
    network: Optional[str] = None
    time_limit: Optional[SimTime] = None
    event_limit: Optional[int] = None
    seed: Optional[int] = None
    guest_runtime_path: Optional[str] = None
    guest_module_path: tuple[str, ...] = ()
    guest_sdk_check: str = "strict"
    assignments: list[Assignment] = field(default_factory=list)

    @classmethod
    def from_chain(cls, name: str, chain: list[Section]) -> "EffectiveConfig":
        eff = cls(section=name)
        merged: dict[str, str] = {}
        for section in chain:  # child first; parents fill gaps only
            for key, value in section.settings.items():
                merged.setdefault(key, value)
            eff.assignments.extend(section.assignments)
        if "network" in merged:
            eff.network = merged["network"]
        if "sim-time-limit" in merged:
            eff.time_limit = SimTime.parse(merged["sim-time-limit"])
        if "event-limit" in merged:
            eff.event_limit = int(merged["event-limit"], 0)
        if "seed" in merged:
            eff.seed = int(merged["seed"], 0)
        if "guest-runtime-path" in merged:
            eff.guest_runtime_path = merged["guest-runtime-path"]
        if "guest-module-path" in merged:
            eff.guest_module_path = tuple(
                p for p in merged["guest-module-path"].split(os.pathsep) if p)
        if "guest-sdk-check" in merged:
            eff.guest_sdk_check = merged["guest-sdk-check"]
        return eff

    def first_match(self, path: str, param: str) -> Optional[Assignment]:
        target = tuple(path.split(".")) + (param,)
        for assignment in self.assignments:
            if segments_match(assignment.segments, target):
                return assignment
        return None
