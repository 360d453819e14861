"""Binding generator: manifest -> guest stubs + registration table.

Reads a line-oriented manifest describing the kernel API exported across
the language boundary and emits (a) guest-side stub source delegating
through the installed export table and (b) the registration-table data the
bridge verifies at startup. Emission is deterministic: entries are sorted,
nothing is timestamped, and the same manifest always produces
byte-identical artifacts.

Name mapping applies, in order: operator renaming (operators do not exist
in the guest language), nested-class hoisting (Inner in Outer becomes
Outer_Inner), namespace stripping, and namespace-prefix repair for
cross-namespace collisions (each colliding party becomes ns_name).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    CollisionUnresolvable,
    DuplicateEntry,
    ManifestError,
    UnmappableOperator,
)

SIGNATURE_TYPES = ("int64", "float64", "string", "bool", "handle",
                   "simtime", "void")

OPERATOR_TABLE = {
    "=": "set",
    "==": "sameAs",
    "!=": "differsFrom",
    "++": "incr",
    "--": "decr",
    "+": "plus",
    "-": "minus",
    "<": "lessThan",
    "<=": "atMost",
    ">": "greaterThan",
    ">=": "atLeast",
    "[]": "at",
}

_PY_TYPES = {"int64": "int", "float64": "float", "string": "str",
             "bool": "bool", "handle": "int", "simtime": "int",
             "void": "None"}


@dataclass(frozen=True)
class ManifestEntry:
    native_name: str
    returns: str
    params: tuple[str, ...] = ()
    namespace: Optional[str] = None
    owner_class: Optional[str] = None
    nested_in: Optional[str] = None
    operator_symbol: Optional[str] = None

    @property
    def is_operator(self) -> bool:
        return self.operator_symbol is not None

    def identity(self):
        return (self.namespace, self.owner_class, self.nested_in,
                self.native_name, self.operator_symbol, self.params)


@dataclass
class ApiManifest:
    entries: list[ManifestEntry]


@dataclass(frozen=True)
class MappedEntry:
    entry: ManifestEntry
    guest_class: Optional[str]
    guest_name: str

    @property
    def exported_name(self) -> str:
        if self.guest_class is not None:
            return f"{self.guest_class}.{self.guest_name}"
        return self.guest_name


@dataclass
class GeneratedBindings:
    stub_source: str
    table_text: str
    entries: list[MappedEntry]


# --- manifest parsing ---------------------------------------------------------

def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def _check_type(name: str, lineno: int, allow_void: bool) -> str:
    if name not in SIGNATURE_TYPES or (name == "void" and not allow_void):
        raise ManifestError(f"unknown signature type '{name}'", lineno)
    return name


def load_manifest(text: str) -> ApiManifest:
    """Parse manifest lines of the form
    ``entry ns=<ns> class=<cls> name=<name> op="<sym>" params=<t,t> returns=<t>``.
    """
    entries: list[ManifestEntry] = []
    seen: set[tuple] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "entry":
            raise ManifestError(f"expected 'entry', got '{tokens[0]}'", lineno)
        fields: dict[str, str] = {}
        for token in tokens[1:]:
            if "=" not in token:
                raise ManifestError(f"expected key=value, got '{token}'",
                                    lineno)
            key, value = token.split("=", 1)
            if key in fields:
                raise ManifestError(f"duplicate field '{key}'", lineno)
            fields[key] = _unquote(value)
        unknown = set(fields) - {"ns", "class", "name", "op", "params",
                                 "returns", "nested"}
        if unknown:
            raise ManifestError(
                f"unknown field(s) {sorted(unknown)}", lineno)
        if "name" not in fields:
            raise ManifestError("missing name=", lineno)
        if "returns" not in fields:
            raise ManifestError("missing returns=", lineno)
        params = tuple(
            _check_type(p, lineno, allow_void=False)
            for p in fields.get("params", "").split(",") if p)
        entry = ManifestEntry(
            native_name=fields["name"],
            returns=_check_type(fields["returns"], lineno, allow_void=True),
            params=params,
            namespace=fields.get("ns"),
            owner_class=fields.get("class"),
            nested_in=fields.get("nested"),
            operator_symbol=fields.get("op"),
        )
        if entry.is_operator and entry.owner_class is None:
            raise ManifestError("operator entries need class=", lineno)
        if entry.nested_in is not None and entry.owner_class is None:
            raise ManifestError("nested= requires class=", lineno)
        if entry.identity() in seen:
            raise DuplicateEntry(f"duplicate entry '{line}'", lineno)
        seen.add(entry.identity())
        entries.append(entry)
    return ApiManifest(entries)


# --- name mapping -------------------------------------------------------------

def map_name(entry: ManifestEntry) -> tuple[Optional[str], str]:
    """Apply operator renaming, nested hoisting, and namespace stripping.

    Returns (guest class or None, guest method name). Cross-namespace
    collision repair needs the whole manifest and happens in map_api.
    """
    if entry.is_operator:
        guest_name = OPERATOR_TABLE.get(entry.operator_symbol)
        if guest_name is None:
            raise UnmappableOperator(
                f"operator '{entry.operator_symbol}' has no guest mapping")
    else:
        guest_name = entry.native_name
    guest_class = entry.owner_class
    if entry.nested_in is not None:
        guest_class = f"{entry.nested_in}_{entry.owner_class}"
    # Namespaces are dropped from guest names entirely; that is what makes
    # cross-namespace collisions possible in the first place.
    return guest_class, guest_name


def map_api(manifest: ApiManifest) -> list[MappedEntry]:
    mapped = [MappedEntry(e, *map_name(e)) for e in manifest.entries]
    groups: dict[tuple, list[int]] = {}
    for i, m in enumerate(mapped):
        groups.setdefault(
            (m.guest_class, m.guest_name, m.entry.params), []).append(i)
    for indexes in groups.values():
        if len(indexes) < 2:
            continue
        namespaces = {mapped[i].entry.namespace for i in indexes}
        if len(namespaces) > 1:
            # Rename every colliding party, not just one: the result does
            # not depend on manifest order.
            for i in indexes:
                m = mapped[i]
                if m.entry.namespace is not None:
                    mapped[i] = replace(
                        m, guest_name=f"{m.entry.namespace}_{m.guest_name}")
    final: dict[tuple, MappedEntry] = {}
    for m in mapped:
        key = (m.guest_class, m.guest_name, m.entry.params)
        if key in final:
            raise CollisionUnresolvable(
                f"entries '{final[key].entry.native_name}' and "
                f"'{m.entry.native_name}' both map to "
                f"{m.exported_name}({','.join(m.entry.params)})")
        final[key] = m
    return mapped


# --- emission -----------------------------------------------------------------

_STUB_PRELUDE = '''"""Guest-side kernel API stubs.

Generated by bindgen from a binding manifest; do not edit by hand. The
host bridge installs the export table at runtime and every wrapper
delegates through it by exported name.
"""

_EXPORTS = {}
_BIND_HOOK = None


class BindingNotInstalled(RuntimeError):
    """Guest code ran outside a live host bridge."""


def install(exports, bind_hook=None):
    global _BIND_HOOK
    _EXPORTS.clear()
    _EXPORTS.update(exports)
    _BIND_HOOK = bind_hook


def teardown():
    global _BIND_HOOK
    _EXPORTS.clear()
    _BIND_HOOK = None


def _call(name, *args):
    try:
        fn = _EXPORTS[name]
    except KeyError:
        raise BindingNotInstalled(
            f"kernel export {name!r} is not installed") from None
    return fn(*args)


class GuestModuleBase:
    """Host-paired module skeleton; instances are created by the bridge.

    The constructor immediately binds the peer pair on the host side, so
    direct instantiation outside a bridge-driven construction fails with
    a clear diagnostic instead of leaving an unbound handle around.
    """

    def __init__(self):
        if _BIND_HOOK is None:
            raise BindingNotInstalled(
                "no active host bridge; guest modules are constructed by "
                "the simulation host, not directly")
        self._host_handle = _BIND_HOOK(self)

    def _dispatch(self, which, msg_handle=None):
        if which == "initialize":
            self.initialize()
        elif which == "handle_message":
            self.handle_message(self._wrap_message(msg_handle))
        elif which == "finish":
            self.finish()
        else:
            raise ValueError(f"unknown callback {which!r}")

    def _wrap_message(self, msg_handle):
        return msg_handle

    def initialize(self):
        pass

    def handle_message(self, msg):
        raise NotImplementedError(
            type(self).__name__ + " must override handle_message(msg)")

    def finish(self):
        pass
'''


def _stub_function(m: MappedEntry, indent: str = "") -> list[str]:
    args = [f"a{i}: {_PY_TYPES[t]}" for i, t in enumerate(m.entry.params)]
    names = ", ".join(f"a{i}" for i in range(len(m.entry.params)))
    call_args = f", {names}" if names else ""
    ret = _PY_TYPES[m.entry.returns]
    lines = [f"{indent}def {m.guest_name}({', '.join(args)}) -> {ret}:"]
    call = f'_call("{m.exported_name}"{call_args})'
    if m.entry.returns == "void":
        lines.append(f"{indent}    {call}")
    else:
        lines.append(f"{indent}    return {call}")
    return lines


def generate(manifest: ApiManifest) -> GeneratedBindings:
    """Emit stub source and registration table for a manifest."""
    mapped = sorted(map_api(manifest),
                    key=lambda m: (m.guest_class or "", m.guest_name,
                                   m.entry.params))
    lines: list[str] = [_STUB_PRELUDE]
    current_class: Optional[str] = None
    for m in mapped:
        lines.append("")
        if m.guest_class is None:
            lines.extend(_stub_function(m))
            current_class = None
            continue
        if m.guest_class != current_class:
            current_class = m.guest_class
            lines.append(f"class {m.guest_class}:")
            lines.append("")
        lines.append("    @staticmethod")
        lines.extend(_stub_function(m, indent="    "))
    table_lines = [
        f"{m.exported_name}\t{','.join(m.entry.params)}\t{m.entry.returns}"
        for m in mapped
    ]
    return GeneratedBindings(
        stub_source="\n".join(lines) + "\n",
        table_text="\n".join(table_lines) + ("\n" if table_lines else ""),
        entries=mapped,
    )


# --- CLI ----------------------------------------------------------------------

def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bindgen",
        description="Generate guest stubs and a registration table from a "
                    "binding manifest.")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--stubs-out", required=True)
    parser.add_argument("--table-out", required=True)
    args = parser.parse_args(argv)
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = load_manifest(fh.read())
        generated = generate(manifest)
    except (ManifestError, UnmappableOperator) as exc:
        print(f"bindgen: manifest error: {exc}", file=sys.stderr)
        return 2
    except CollisionUnresolvable as exc:
        print(f"bindgen: collision error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"bindgen: {exc}", file=sys.stderr)
        return 2
    with open(args.stubs_out, "w", encoding="utf-8") as fh:
        fh.write(generated.stub_source)
    with open(args.table_out, "w", encoding="utf-8") as fh:
        fh.write(generated.table_text)
    return 0


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
