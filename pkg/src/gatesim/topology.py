"""Parser for the network-description DSL (.top files).

Parsing is purely syntactic: name resolution, direction checks, and type
checks all happen later during elaboration, so the parser stays reusable
for tooling. The pretty-printer emits a canonical form that reparses to a
structurally identical tree.

Grammar sketch::

    simple Tic {
        parameters:
            time delay = 0.1s;
            bool starter = false;
        gates:
            input in;
            output out;
            input upper_in[2];
    }
    network TicToc {
        submodules:
            tic: Tic;
            toc: Tic;
        connections:
            tic.out --> { delay = 100ms; } --> toc.in;
            toc.out --> { delay = 100ms; } --> tic.in;
    }

`compound` declares a reusable container; `network` is a compound that can
be named as the root in a run configuration. Submodule and gate vectors
take literal sizes only. Guest-backed submodules use type names of the
form ``guest:module.Class``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import DuplicateName, ParseError
from .simtime import SimTime, parse_datarate

PARAM_KINDS = ("int", "double", "string", "time", "bool")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>-->)
  | (?P<time>\d+(?:\.\d+)?(?:s|ms|us|ns|ps)\b)
  | (?P<rate>\d+(?:bps|kbps|Mbps|Gbps)\b)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[{}\[\]:;=.\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, m.start() - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- AST ---------------------------------------------------------------------

@dataclass
class ParamDecl:
    name: str
    kind: str
    default: object = None
    has_default: bool = False


@dataclass
class GateDecl:
    name: str
    direction: str  # "input" | "output"
    size: Optional[int] = None


@dataclass
class SimpleDecl:
    name: str
    params: list[ParamDecl] = field(default_factory=list)
    gates: list[GateDecl] = field(default_factory=list)


@dataclass
class EndpointRef:
    submodule: Optional[str]
    sub_index: Optional[int]
    gate: str
    gate_index: Optional[int]

    def format(self) -> str:
        parts = ""
        if self.submodule is not None:
            parts = self.submodule
            if self.sub_index is not None:
                parts += f"[{self.sub_index}]"
            parts += "."
        parts += self.gate
        if self.gate_index is not None:
            parts += f"[{self.gate_index}]"
        return parts


@dataclass
class ConnDecl:
    src: EndpointRef
    dst: EndpointRef
    delay: Optional[SimTime] = None
    datarate: Optional[int] = None


@dataclass
class SubmoduleDecl:
    name: str
    type_name: str
    vector_size: Optional[int] = None


@dataclass
class CompoundDecl:
    name: str
    gates: list[GateDecl] = field(default_factory=list)
    submodules: list[SubmoduleDecl] = field(default_factory=list)
    connections: list[ConnDecl] = field(default_factory=list)
    is_network: bool = False


@dataclass
class TopologyAst:
    simples: list[SimpleDecl] = field(default_factory=list)
    compounds: list[CompoundDecl] = field(default_factory=list)

    def simple(self, name: str) -> Optional[SimpleDecl]:
        for decl in self.simples:
            if decl.name == name:
                return decl
        return None

    def compound(self, name: str) -> Optional[CompoundDecl]:
        for decl in self.compounds:
            if decl.name == name:
                return decl
        return None

    def type_names(self) -> set[str]:
        return ({d.name for d in self.simples}
                | {d.name for d in self.compounds})


def merge(asts: list[TopologyAst]) -> TopologyAst:
    """Combine several parsed files; duplicate type names are rejected."""
    out = TopologyAst()
    seen: set[str] = set()
    for ast in asts:
        for decl in ast.simples + ast.compounds:
            if decl.name in seen:
                raise DuplicateName(f"type '{decl.name}' declared twice")
            seen.add(decl.name)
        out.simples.extend(ast.simples)
        out.compounds.extend(ast.compounds)
    return out


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, *expected: str) -> ParseError:
        tok = self.peek()
        what = tok.text or "end of input"
        return ParseError(f"unexpected {what!r}", tok.line, tok.column,
                          expected)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise self.error(repr(text))
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(what)
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.peek().text == text:
            self.advance()
            return True
        return False

    # -- top level -------------------------------------------------------

    def parse_topology(self) -> TopologyAst:
        ast = TopologyAst()
        names: set[str] = set()
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text == "simple":
                decl = self.simple_decl()
            elif tok.text in ("compound", "network"):
                decl = self.compound_decl()
            else:
                raise self.error("'simple'", "'compound'", "'network'")
            if decl.name in names:
                raise DuplicateName(f"type '{decl.name}' declared twice",
                                    tok.line, tok.column)
            names.add(decl.name)
            if isinstance(decl, SimpleDecl):
                ast.simples.append(decl)
            else:
                ast.compounds.append(decl)
        return ast

    def simple_decl(self) -> SimpleDecl:
        self.expect("simple")
        name = self.expect_ident("module type name").text
        self.expect("{")
        decl = SimpleDecl(name)
        seen_params: set[str] = set()
        seen_gates: set[str] = set()
        while not self.accept("}"):
            section = self.peek()
            if section.text == "parameters":
                self.advance()
                self.expect(":")
                while self.peek().text in PARAM_KINDS:
                    decl.params.append(self.param_decl(seen_params))
            elif section.text == "gates":
                self.advance()
                self.expect(":")
                while self.peek().text in ("input", "output"):
                    decl.gates.append(self.gate_decl(seen_gates))
            else:
                raise self.error("'parameters'", "'gates'", "'}'")
        return decl

    def param_decl(self, seen: set[str]) -> ParamDecl:
        kind = self.advance().text
        tok = self.expect_ident("parameter name")
        if tok.text in seen:
            raise DuplicateName(f"parameter '{tok.text}' declared twice",
                                tok.line, tok.column)
        seen.add(tok.text)
        decl = ParamDecl(tok.text, kind)
        if self.accept("="):
            decl.default = self.literal(kind)
            decl.has_default = True
        self.expect(";")
        return decl

    def gate_decl(self, seen: set[str]) -> GateDecl:
        direction = self.advance().text
        tok = self.expect_ident("gate name")
        if tok.text in seen:
            raise DuplicateName(f"gate '{tok.text}' declared twice",
                                tok.line, tok.column)
        seen.add(tok.text)
        size = None
        if self.accept("["):
            size = self.int_literal()
            self.expect("]")
        self.expect(";")
        return GateDecl(tok.text, direction, size)

    def literal(self, kind: str):
        tok = self.peek()
        if kind == "time":
            if tok.kind != "time":
                raise self.error("time literal with unit")
            self.advance()
            return SimTime.parse(tok.text)
        if kind == "int":
            return self.int_literal()
        if kind == "double":
            negative = self.accept("-")
            tok = self.peek()
            if tok.kind not in ("float", "int"):
                raise self.error("numeric literal")
            self.advance()
            value = float(tok.text)
            return -value if negative else value
        if kind == "bool":
            if tok.text not in ("true", "false"):
                raise self.error("'true'", "'false'")
            self.advance()
            return tok.text == "true"
        if kind == "string":
            if tok.kind != "string":
                raise self.error("string literal")
            self.advance()
            return _unquote(tok.text)
        raise self.error("literal")

    def int_literal(self) -> int:
        negative = self.accept("-")
        tok = self.peek()
        if tok.kind not in ("int", "hex"):
            raise self.error("integer literal")
        self.advance()
        value = int(tok.text, 0)
        return -value if negative else value

    def compound_decl(self) -> CompoundDecl:
        is_network = self.advance().text == "network"
        name = self.expect_ident("module type name").text
        self.expect("{")
        decl = CompoundDecl(name, is_network=is_network)
        seen_gates: set[str] = set()
        seen_subs: set[str] = set()
        while not self.accept("}"):
            section = self.peek()
            if section.text == "gates":
                self.advance()
                self.expect(":")
                while self.peek().text in ("input", "output"):
                    decl.gates.append(self.gate_decl(seen_gates))
            elif section.text == "submodules":
                self.advance()
                self.expect(":")
                while (self.peek().kind == "ident"
                       and self.peek().text not in
                       ("gates", "submodules", "connections")
                       and self.tokens[self.pos + 1].text in (":", "[")):
                    decl.submodules.append(self.submodule_decl(seen_subs))
            elif section.text == "connections":
                self.advance()
                self.expect(":")
                while (self.peek().kind == "ident"
                       and self.peek().text not in
                       ("gates", "submodules", "connections")):
                    decl.connections.append(self.conn_decl())
            else:
                raise self.error("'gates'", "'submodules'", "'connections'",
                                 "'}'")
        return decl

    def submodule_decl(self, seen: set[str]) -> SubmoduleDecl:
        tok = self.expect_ident("submodule name")
        if tok.text in seen:
            raise DuplicateName(f"submodule '{tok.text}' declared twice",
                                tok.line, tok.column)
        seen.add(tok.text)
        size = None
        if self.accept("["):
            size = self.int_literal()
            self.expect("]")
        self.expect(":")
        type_name = self.type_name()
        self.expect(";")
        return SubmoduleDecl(tok.text, type_name, size)

    def type_name(self) -> str:
        head = self.expect_ident("module type").text
        if head == "guest" and self.accept(":"):
            parts = [self.expect_ident("guest module path").text]
            while self.accept("."):
                parts.append(self.expect_ident("guest module path").text)
            return "guest:" + ".".join(parts)
        return head

    def conn_decl(self) -> ConnDecl:
        src = self.endpoint()
        self.expect("-->")
        delay = None
        datarate = None
        if self.accept("{"):
            while not self.accept("}"):
                attr = self.expect_ident("'delay' or 'datarate'")
                self.expect("=")
                if attr.text == "delay":
                    tok = self.peek()
                    if tok.kind != "time":
                        raise self.error("time literal with unit")
                    self.advance()
                    delay = SimTime.parse(tok.text)
                elif attr.text == "datarate":
                    tok = self.peek()
                    if tok.kind not in ("rate", "int"):
                        raise self.error("datarate literal")
                    self.advance()
                    datarate = parse_datarate(tok.text)
                else:
                    raise ParseError(f"unknown connection attribute "
                                     f"'{attr.text}'", attr.line, attr.column,
                                     ("'delay'", "'datarate'"))
                self.expect(";")
            self.expect("-->")
        dst = self.endpoint()
        self.expect(";")
        return ConnDecl(src, dst, delay, datarate)

    def endpoint(self) -> EndpointRef:
        first = self.expect_ident("gate or submodule").text
        first_index = None
        if self.accept("["):
            first_index = self.int_literal()
            self.expect("]")
        if self.accept("."):
            gate = self.expect_ident("gate name").text
            gate_index = None
            if self.accept("["):
                gate_index = self.int_literal()
                self.expect("]")
            return EndpointRef(first, first_index, gate, gate_index)
        return EndpointRef(None, None, first, first_index)


def parse_topology(text: str) -> TopologyAst:
    """Parse one .top source into an AST, or raise a positioned ParseError."""
    return _Parser(tokenize(text)).parse_topology()


# --- pretty printer -----------------------------------------------------------

def _unquote(text: str) -> str:
    return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_default(kind: str, value) -> str:
    if kind == "time":
        return str(value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "string":
        return _quote(value)
    return repr(value)


def _format_gate(decl: GateDecl) -> str:
    size = f"[{decl.size}]" if decl.size is not None else ""
    return f"        {decl.direction} {decl.name}{size};"


def format_topology(ast: TopologyAst) -> str:
    """Emit canonical DSL text; parsing it back yields an identical AST."""
    out: list[str] = []
    for decl in ast.simples:
        out.append(f"simple {decl.name} {{")
        if decl.params:
            out.append("    parameters:")
            for p in decl.params:
                default = (f" = {_format_default(p.kind, p.default)}"
                           if p.has_default else "")
                out.append(f"        {p.kind} {p.name}{default};")
        if decl.gates:
            out.append("    gates:")
            out.extend(_format_gate(g) for g in decl.gates)
        out.append("}")
    for decl in ast.compounds:
        out.append(f"{'network' if decl.is_network else 'compound'} "
                   f"{decl.name} {{")
        if decl.gates:
            out.append("    gates:")
            out.extend(_format_gate(g) for g in decl.gates)
        if decl.submodules:
            out.append("    submodules:")
            for sub in decl.submodules:
                size = (f"[{sub.vector_size}]"
                        if sub.vector_size is not None else "")
                out.append(f"        {sub.name}{size}: {sub.type_name};")
        if decl.connections:
            out.append("    connections:")
            for conn in decl.connections:
                attrs = ""
                if conn.delay is not None or conn.datarate is not None:
                    bits = []
                    if conn.delay is not None:
                        bits.append(f"delay = {conn.delay};")
                    if conn.datarate is not None:
                        bits.append(f"datarate = {conn.datarate};")
                    attrs = "{ " + " ".join(bits) + " } --> "
                out.append(f"        {conn.src.format()} --> "
                           f"{attrs}{conn.dst.format()};")
        out.append("}")
    return "\n".join(out) + "\n"
