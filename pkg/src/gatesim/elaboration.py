"""Network elaboration: AST + config + module registry -> kernel graph.

The module tree is instantiated depth-first in declaration order, so dense
module ids are reproducible. Parameters resolve config patterns first,
then declaration defaults. Native module types are constructed through the
registry; guest types are recorded as instantiation requests and created
by the bridge afterwards (which is what makes guest-runtime startup lazy).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .config import EffectiveConfig
from .errors import (
    ElaborationError,
    GateDirectionMismatch,
    ParameterError,
    TimeParseError,
    UnassignedParameter,
    UnconnectedGate,
    UnknownModuleType,
)
from .kernel import Direction, Gate, Kernel
from .simtime import SimTime, ZERO
from .topology import (
    CompoundDecl,
    ConnDecl,
    EndpointRef,
    GateDecl,
    ParamDecl,
    SimpleDecl,
    TopologyAst,
)

GUEST_PREFIX = "guest:"

_TIME_LITERAL = re.compile(r"^[+-]?\d+(\.\d+)?(s|ms|us|ns|ps)$")


class ModuleTypeRegistry:
    """Maps topology type names to native module classes."""

    def __init__(self):
        self._classes: dict[str, type] = {}

    def register(self, name: str, cls: type) -> None:
        if name in self._classes:
            raise ElaborationError(f"module type '{name}' registered twice")
        self._classes[name] = cls

    def lookup(self, name: str) -> Optional[type]:
        return self._classes.get(name)

    def names(self) -> list[str]:
        return sorted(self._classes)


@dataclass
class GuestRequest:
    """A deferred guest-module instantiation recorded during elaboration."""

    class_spec: str
    module_id: int
    path: str


@dataclass
class ElaboratedNetwork:
    """A sealed kernel plus any guest modules still waiting for their peer."""

    kernel: Kernel
    network_name: str
    guest_requests: list[GuestRequest] = field(default_factory=list)

    def instantiate_guests(self, bridge) -> None:
        """Create guest peers in elaboration order; starts the runtime lazily."""
        pending, self.guest_requests = self.guest_requests, []
        for request in pending:
            bridge.create_guest_module(request.class_spec, request.module_id)


def parse_param_value(kind: str, raw: str):
    """Interpret a raw config value under a declared parameter kind."""
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw, 0)
        if kind == "double":
            return float(raw)
        if kind == "bool":
            if raw not in ("true", "false"):
                raise ValueError(f"expected true/false, got '{raw}'")
            return raw == "true"
        if kind == "time":
            return SimTime.parse(raw)
        if kind == "string":
            if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
                return raw[1:-1]
            return raw
    except (ValueError, TimeParseError) as exc:
        raise ElaborationError(f"bad {kind} value '{raw}': {exc}") from exc
    raise ElaborationError(f"unknown parameter kind '{kind}'")


def infer_param(raw: str) -> tuple[str, object]:
    """Guess (kind, value) for parameters of guest modules, which have no
    declared interface on the host side."""
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        return "string", raw[1:-1]
    if raw in ("true", "false"):
        return "bool", raw == "true"
    if _TIME_LITERAL.match(raw):
        return "time", SimTime.parse(raw)
    try:
        return "int", int(raw, 0)
    except ValueError:
        pass
    try:
        return "double", float(raw)
    except ValueError:
        pass
    return "string", raw


class _Elaborator:
    def __init__(self, kernel: Kernel, ast: TopologyAst,
                 config: EffectiveConfig, registry: ModuleTypeRegistry):
        self.kernel = kernel
        self.ast = ast
        self.config = config
        self.registry = registry
        self.guest_requests: list[GuestRequest] = []
        self.guest_ids: set[int] = set()

    # -- module instantiation ------------------------------------------------

    def instantiate(self, type_name: str, path: str) -> int:
        if type_name.startswith(GUEST_PREFIX):
            return self._instantiate_guest(type_name[len(GUEST_PREFIX):], path)
        simple = self.ast.simple(type_name)
        if simple is not None:
            return self._instantiate_simple(type_name, path,
                                            simple.params, simple.gates)
        compound = self.ast.compound(type_name)
        if compound is not None:
            return self._instantiate_compound(compound, path)
        cls = self.registry.lookup(type_name)
        if cls is not None:
            params, gates = _class_interface(cls)
            return self._instantiate_simple(type_name, path, params, gates)
        raise UnknownModuleType(
            f"'{type_name}' (at {path}) is neither declared nor registered")

    def _instantiate_simple(self, type_name: str, path: str,
                            param_decls: list[ParamDecl],
                            gate_decls: list[GateDecl]) -> int:
        cls = self.registry.lookup(type_name)
        if cls is None:
            raise UnknownModuleType(
                f"simple type '{type_name}' (at {path}) has no registered "
                f"implementation")
        params, kinds = self._resolve_params(path, param_decls)
        module_id = self.kernel.add_module(path, cls(), params, kinds)
        self._add_gates(module_id, gate_decls)
        return module_id

    def _instantiate_guest(self, class_spec: str, path: str) -> int:
        from .bridge import GuestModuleShell
        shell = GuestModuleShell(class_spec)
        module_id = self.kernel.add_module(path, shell)
        entry = self.kernel.module(module_id)
        entry.param_resolver = self._guest_resolver(path)
        self.guest_ids.add(module_id)
        self.guest_requests.append(GuestRequest(class_spec, module_id, path))
        return module_id

    def _guest_resolver(self, path: str):
        def resolve(name: str) -> tuple[str, object]:
            assignment = self.config.first_match(path, name)
            if assignment is None:
                raise ParameterError(
                    f"guest module '{path}' has no assignment for "
                    f"parameter '{name}'")
            return infer_param(assignment.value)
        return resolve

    def _instantiate_compound(self, decl: CompoundDecl, path: str) -> int:
        module_id = self.kernel.add_module(path)
        self._add_gates(module_id, decl.gates)
        for sub in decl.submodules:
            if sub.vector_size is None:
                self.instantiate(sub.type_name, f"{path}.{sub.name}")
            else:
                for i in range(sub.vector_size):
                    self.instantiate(sub.type_name, f"{path}.{sub.name}[{i}]")
        for conn in decl.connections:
            self._connect(module_id, path, conn)
        return module_id

    def _add_gates(self, module_id: int, gate_decls: list[GateDecl]):
        for decl in gate_decls:
            direction = Direction(decl.direction)
            if decl.size is None:
                self.kernel.add_gate(module_id, decl.name, direction)
            else:
                for i in range(decl.size):
                    self.kernel.add_gate(module_id, decl.name, direction, i)

    # -- parameters -----------------------------------------------------------

    def _resolve_params(self, path: str, decls: list[ParamDecl]):
        params: dict[str, object] = {}
        kinds: dict[str, str] = {}
        for decl in decls:
            assignment = self.config.first_match(path, decl.name)
            if assignment is not None:
                try:
                    value = parse_param_value(decl.kind, assignment.value)
                except ElaborationError as exc:
                    raise ElaborationError(
                        f"{path}.{decl.name} (config line "
                        f"{assignment.line}): {exc}") from exc
            elif decl.has_default:
                value = decl.default
            else:
                raise UnassignedParameter(
                    f"parameter '{path}.{decl.name}' has no assignment and "
                    f"no default")
            params[decl.name] = value
            kinds[decl.name] = decl.kind
        return params, kinds

    # -- connections ------------------------------------------------------------

    def _endpoint_gate(self, scope_id: int, scope_path: str,
                       ref: EndpointRef, side: str) -> Gate:
        if ref.submodule is None:
            owner_id = scope_id
            owner_path = scope_path
            # A compound's input gate feeds the inside; its output gate
            # drains the inside.
            want = Direction.INPUT if side == "src" else Direction.OUTPUT
        else:
            sub = ref.submodule
            if ref.sub_index is not None:
                sub = f"{sub}[{ref.sub_index}]"
            owner_path = f"{scope_path}.{sub}"
            try:
                owner_id = self.kernel.module_by_path(owner_path).id
            except KeyError:
                raise ElaborationError(
                    f"connection references unknown submodule "
                    f"'{owner_path}'") from None
            want = Direction.OUTPUT if side == "src" else Direction.INPUT
        entry = self.kernel.module(owner_id)
        gate = entry.gates.get((ref.gate, ref.gate_index))
        if gate is None:
            if owner_id in self.guest_ids:
                gate = self.kernel.add_gate(owner_id, ref.gate, want,
                                            ref.gate_index)
            else:
                label = (ref.gate if ref.gate_index is None
                         else f"{ref.gate}[{ref.gate_index}]")
                raise ElaborationError(
                    f"module '{owner_path}' has no gate '{label}'")
        if gate.direction is not want:
            raise GateDirectionMismatch(
                f"{self.kernel.gate_path(gate)} is an "
                f"{gate.direction.value} gate, cannot be the "
                f"{'source' if side == 'src' else 'destination'} here")
        return gate

    def _connect(self, scope_id: int, scope_path: str, conn: ConnDecl):
        src = self._endpoint_gate(scope_id, scope_path, conn.src, "src")
        dst = self._endpoint_gate(scope_id, scope_path, conn.dst, "dst")
        self.kernel.connect(src, dst, conn.delay or ZERO, conn.datarate)

    # -- checks ----------------------------------------------------------------

    def check_connectivity(self):
        for entry in self.kernel.modules():
            for gate in entry.gates.values():
                if entry.is_simple:
                    needs_out = gate.direction is Direction.OUTPUT
                    ok = gate.outgoing if needs_out else gate.incoming
                    if not ok:
                        raise UnconnectedGate(
                            f"gate {self.kernel.gate_path(gate)} is not "
                            f"connected")
                else:
                    if gate.incoming is None or gate.outgoing is None:
                        raise UnconnectedGate(
                            f"compound gate {self.kernel.gate_path(gate)} "
                            f"must be wired on both sides")


def _class_interface(cls) -> tuple[list[ParamDecl], list[GateDecl]]:
    """Build declaration lists from a module class's interface attributes."""
    params = []
    for name, spec in getattr(cls, "param_decls", {}).items():
        if len(spec) == 1:
            params.append(ParamDecl(name, spec[0]))
        else:
            params.append(ParamDecl(name, spec[0], spec[1], True))
    gates = []
    for decl in getattr(cls, "gate_decls", []):
        if len(decl) == 2:
            gates.append(GateDecl(decl[0], decl[1]))
        else:
            gates.append(GateDecl(decl[0], decl[1], decl[2]))
    return params, gates


def elaborate(ast: TopologyAst, config: EffectiveConfig,
              registry: ModuleTypeRegistry,
              seed: Optional[int] = None) -> ElaboratedNetwork:
    """Build the module tree for config.network and seal the kernel.

    Guest modules come back as pending requests on the result; call
    ``instantiate_guests(bridge)`` before initialize() to create their
    peers (a network without guest modules never touches the bridge).
    """
    if not config.network:
        raise ElaborationError("configuration does not name a network")
    decl = ast.compound(config.network)
    if decl is None or not decl.is_network:
        raise UnknownModuleType(
            f"'{config.network}' is not a declared network")
    if seed is None:
        seed = config.seed if config.seed is not None else 1
    kernel = Kernel(seed=seed)
    elaborator = _Elaborator(kernel, ast, config, registry)
    elaborator._instantiate_compound(decl, decl.name)
    elaborator.check_connectivity()
    kernel.seal()
    return ElaboratedNetwork(kernel, decl.name, elaborator.guest_requests)
