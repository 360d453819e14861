"""Single-threaded discrete-event simulation kernel.

The kernel owns the simulated clock, the future event set, the
module/gate/connection graph, and message ownership. Modules interact with
it only from inside their lifecycle callbacks (initialize, handle_message,
finish); the event loop is strictly single-threaded and never re-entrant
except through that documented callback path.

Every live message has exactly one owner at any instant: a module, the
future event set, or the guest runtime. All ownership changes funnel
through one audited transfer point so runs can assert conservation.
"""

from __future__ import annotations

import heapq
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    CallbackFailure,
    NotOwner,
    NotScheduled,
    ParameterError,
    SchedulingInPast,
    SimulationError,
    UnconnectedGate,
    UnknownGate,
    WrongDirection,
)
from .simtime import SimTime, ZERO, transmission_ticks

log = logging.getLogger("gatesim.kernel")


class Direction(Enum):
    INPUT = "input"
    OUTPUT = "output"


class OwnerKind(Enum):
    MODULE = "module"
    FES = "fes"
    GUEST = "guest"
    DELETED = "deleted"


#: An owner tag: (kind, module id). The id is 0 for the FES.
Owner = tuple[OwnerKind, int]

FES_OWNER: Owner = (OwnerKind.FES, 0)


@dataclass(eq=False)
class Gate:
    """A named directional port of a module."""

    module_id: int
    name: str
    direction: Direction
    index: Optional[int] = None
    incoming: Optional["Connection"] = None
    outgoing: Optional["Connection"] = None

    @property
    def label(self) -> str:
        return self.name if self.index is None else f"{self.name}[{self.index}]"


@dataclass(eq=False)
class Connection:
    """A directed link between an output-side and an input-side gate."""

    src: Gate
    dst: Gate
    delay: SimTime = ZERO
    datarate: Optional[int] = None


@dataclass(frozen=True)
class Route:
    """A resolved path from a simple output gate to a simple input gate.

    Chains through compound pass-through gates are flattened at seal time:
    delays sum, and every rate-limited hop adds its own serialization time.
    """

    final_gate: Gate
    delay_ticks: int
    datarates: tuple[int, ...]

    def arrival_ticks(self, now_ticks: int, byte_length: int) -> int:
        total = now_ticks + self.delay_ticks
        for rate in self.datarates:
            total += transmission_ticks(byte_length, rate)
        return total


@dataclass(eq=False)
class Message:
    """The unit of communication and of self-scheduling."""

    id: int
    name: str
    kind: int = 0
    creation_time: SimTime = ZERO
    send_time: SimTime = ZERO
    arrival_time: SimTime = ZERO
    src_gate: Optional[Gate] = None
    dst_gate: Optional[Gate] = None
    owner: Owner = (OwnerKind.DELETED, 0)
    control_info: Optional[object] = None
    payload_bytes: Optional[bytes] = None
    byte_length: int = 0

    def __repr__(self) -> str:
        return f"Message(#{self.id} {self.name!r} kind={self.kind})"


@dataclass(eq=False)
class FesEntry:
    arrival: SimTime
    priority: int
    seq: int
    msg: Message
    dst_module_id: int
    cancelled: bool = False

    def sort_key(self):
        return (self.arrival.ticks, self.priority, self.seq)


class FutureEventSet:
    """Scheduled events ordered by (arrival time, priority, insertion seq).

    The insertion sequence number is unique, so no two entries ever compare
    equal and dispatch order is a total order.
    """

    def __init__(self):
        self._heap: list[tuple[int, int, int, FesEntry]] = []
        self._by_msg: dict[int, FesEntry] = {}
        self._next_seq = 0
        self._live = 0

    def __len__(self) -> int:
        return self._live

    def insert(self, arrival: SimTime, priority: int, msg: Message,
               dst_module_id: int) -> FesEntry:
        entry = FesEntry(arrival, priority, self._next_seq, msg, dst_module_id)
        self._next_seq += 1
        heapq.heappush(self._heap,
                       (arrival.ticks, priority, entry.seq, entry))
        self._by_msg[msg.id] = entry
        self._live += 1
        return entry

    def lookup(self, msg_id: int) -> Optional[FesEntry]:
        return self._by_msg.get(msg_id)

    def cancel(self, msg_id: int) -> FesEntry:
        entry = self._by_msg.pop(msg_id)
        entry.cancelled = True
        self._live -= 1
        return entry

    def _drop_cancelled(self):
        while self._heap and self._heap[0][3].cancelled:
            heapq.heappop(self._heap)

    def peek_ticks(self) -> Optional[int]:
        self._drop_cancelled()
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Optional[FesEntry]:
        self._drop_cancelled()
        if not self._heap:
            return None
        entry = heapq.heappop(self._heap)[3]
        del self._by_msg[entry.msg.id]
        self._live -= 1
        return entry


@dataclass
class EventRecord:
    """One dispatched event, as it appears in the event log."""

    seq: int
    time: SimTime
    src: str
    dst: str
    msg_name: str
    kind: int

    def format_line(self) -> str:
        return (f"#{self.seq} t={self.time.to_decimal()} "
                f"{self.src} -> {self.dst} msg={self.msg_name} kind={self.kind}")


class StopReason(Enum):
    EXHAUSTED = "exhausted"
    TIME_LIMIT = "time_limit"
    EVENT_LIMIT = "event_limit"
    ERROR = "error"


@dataclass
class RunReport:
    events_executed: int
    final_time: SimTime
    stop_reason: StopReason
    error_detail: Optional[str] = None


@dataclass(eq=False)
class ModuleEntry:
    id: int
    path: str
    behavior: Optional["SimpleModule"]
    params: dict[str, object] = field(default_factory=dict)
    param_kinds: dict[str, str] = field(default_factory=dict)
    gates: dict[tuple[str, Optional[int]], Gate] = field(default_factory=dict)
    # Guest modules have no declared interface; their parameters resolve
    # lazily through this hook (name -> (kind, value)).
    param_resolver: Optional[object] = None

    @property
    def is_simple(self) -> bool:
        return self.behavior is not None

    def _resolve_param(self, name: str) -> bool:
        if name in self.params:
            return True
        if self.param_resolver is None:
            return False
        kind, value = self.param_resolver(name)
        self.params[name] = value
        self.param_kinds[name] = kind
        return True


class SimpleModule:
    """Base class for native behavioral modules.

    Subclasses implement initialize / handle_message / finish and use the
    helper methods to talk to the kernel. handle_message must return
    without blocking; waiting for a future event inside it is impossible
    by construction (schedule a self-message instead).

    Class attributes declare the module interface for elaboration when no
    DSL declaration exists: ``gate_decls`` is a list of (name, direction)
    or (name, direction, vector_size) tuples, ``param_decls`` maps
    parameter names to (kind, default) with default None meaning required.
    """

    gate_decls: list = []
    param_decls: dict = {}

    _kernel: "Kernel"
    _module_id: int

    def _bind(self, kernel: "Kernel", module_id: int):
        self._kernel = kernel
        self._module_id = module_id

    # -- lifecycle callbacks (override in subclasses) ----------------------

    def initialize(self):
        pass

    def handle_message(self, msg: Message):
        raise NotImplementedError(
            f"{type(self).__name__} must override handle_message")

    def finish(self):
        pass

    # -- kernel helpers ----------------------------------------------------

    @property
    def path(self) -> str:
        return self._kernel.module(self._module_id).path

    def now(self) -> SimTime:
        return self._kernel.now()

    def new_message(self, name: str, kind: int = 0, byte_length: int = 0,
                    payload: Optional[bytes] = None) -> Message:
        return self._kernel.new_message(self._module_id, name, kind,
                                        byte_length, payload)

    def delete_message(self, msg: Message):
        self._kernel.delete_message(self._module_id, msg)

    def send(self, msg: Message, gate: str | Gate, index: Optional[int] = None,
             priority: int = 0):
        self._kernel.send(self._module_id, msg, gate, index, priority)

    def schedule_at(self, t: SimTime, msg: Message, priority: int = 0):
        self._kernel.schedule_at(self._module_id, t, msg, priority)

    def cancel_event(self, msg: Message) -> Message:
        return self._kernel.cancel_event(self._module_id, msg)

    def par(self, name: str):
        return self._kernel.get_parameter(self._module_id, name)

    def record_scalar(self, name: str, value):
        self._kernel.record_scalar(self._module_id, name, value)

    def log(self, text: str):
        self._kernel.module_log(self._module_id, text)

    def tx_duration(self, gate: str | Gate, byte_length: int,
                    index: Optional[int] = None) -> SimTime:
        return self._kernel.tx_duration(self._module_id, gate, byte_length,
                                        index)

    def rng_int(self, bound: int) -> int:
        return self._kernel.rng_int(bound)


class Kernel:
    """The simulation: module graph, clock, FES, and event loop."""

    def __init__(self, seed: int = 1):
        self._modules: list[ModuleEntry] = []
        self._by_path: dict[str, int] = {}
        self._fes = FutureEventSet()
        self._now = ZERO
        self._state = "building"
        self._route_by_gate: dict[tuple[int, str, Optional[int]], Route] = {}
        self._messages: dict[int, Message] = {}
        self._next_msg_id = 0
        self.events: list[EventRecord] = []
        self.scalars: list[tuple[str, str, object]] = []
        self.rng = random.Random(seed)
        self.counters = {
            "created": 0, "deleted": 0, "delivered": 0,
            "transfers": 0, "ownership_violations": 0,
        }
        self.log_hook = None  # callable(EventRecord) or None

    # -- construction -------------------------------------------------------

    def add_module(self, path: str, behavior: Optional[SimpleModule] = None,
                   params: Optional[dict] = None,
                   param_kinds: Optional[dict] = None) -> int:
        if self._state != "building":
            raise SimulationError("cannot add modules after seal()")
        if path in self._by_path:
            raise SimulationError(f"duplicate module path '{path}'")
        module_id = len(self._modules)
        entry = ModuleEntry(module_id, path, behavior, params or {},
                            param_kinds or {})
        self._modules.append(entry)
        self._by_path[path] = module_id
        if behavior is not None:
            behavior._bind(self, module_id)
        return module_id

    def add_gate(self, module_id: int, name: str, direction: Direction,
                 index: Optional[int] = None) -> Gate:
        if self._state != "building":
            raise SimulationError("cannot add gates after seal()")
        entry = self._modules[module_id]
        key = (name, index)
        if key in entry.gates:
            raise SimulationError(
                f"duplicate gate {name!r} index={index} on '{entry.path}'")
        gate = Gate(module_id, name, direction, index)
        entry.gates[key] = gate
        return gate

    def connect(self, src: Gate, dst: Gate, delay: SimTime = ZERO,
                datarate: Optional[int] = None) -> Connection:
        if delay.ticks < 0:
            raise SimulationError("connection delay must be >= 0")
        if datarate is not None and datarate <= 0:
            raise SimulationError("datarate must be positive")
        if self._modules[src.module_id].is_simple and src.direction is not Direction.OUTPUT:
            raise WrongDirection(
                f"cannot connect from input gate {self.gate_path(src)}")
        if self._modules[dst.module_id].is_simple and dst.direction is not Direction.INPUT:
            raise WrongDirection(
                f"cannot connect into output gate {self.gate_path(dst)}")
        if src.outgoing is not None:
            raise SimulationError(
                f"gate {self.gate_path(src)} already has an outgoing connection")
        if dst.incoming is not None:
            raise SimulationError(
                f"gate {self.gate_path(dst)} already has an incoming connection")
        conn = Connection(src, dst, delay, datarate)
        src.outgoing = conn
        dst.incoming = conn
        return conn

    def seal(self):
        """Freeze the graph and resolve routes through compound gates."""
        if self._state != "building":
            raise SimulationError("seal() called twice")
        for entry in self._modules:
            if not entry.is_simple:
                continue
            for gate in entry.gates.values():
                if gate.direction is Direction.OUTPUT and gate.outgoing:
                    self._route_by_gate[self._gate_key(gate)] = \
                        self._resolve_route(gate)
        self._state = "sealed"

    def _gate_key(self, gate: Gate):
        return (gate.module_id, gate.name, gate.index)

    def _resolve_route(self, start: Gate) -> Route:
        delay_ticks = 0
        rates: list[int] = []
        gate = start
        hops = 0
        while True:
            conn = gate.outgoing
            if conn is None:
                raise UnconnectedGate(
                    f"connection chain from {self.gate_path(start)} dangles at "
                    f"{self.gate_path(gate)}")
            delay_ticks += conn.delay.ticks
            if conn.datarate is not None:
                rates.append(conn.datarate)
            nxt = conn.dst
            if self._modules[nxt.module_id].is_simple:
                return Route(nxt, delay_ticks, tuple(rates))
            gate = nxt
            hops += 1
            if hops > len(self._modules) * 4 + 16:
                raise SimulationError(
                    f"connection cycle through {self.gate_path(start)}")

    # -- lookups -------------------------------------------------------------

    def module(self, module_id: int) -> ModuleEntry:
        return self._modules[module_id]

    def module_by_path(self, path: str) -> ModuleEntry:
        return self._modules[self._by_path[path]]

    def modules(self) -> list[ModuleEntry]:
        return list(self._modules)

    def gate(self, module_id: int, name: str,
             index: Optional[int] = None) -> Gate:
        entry = self._modules[module_id]
        try:
            return entry.gates[(name, index)]
        except KeyError:
            raise UnknownGate(
                f"module '{entry.path}' has no gate {name!r} index={index}"
            ) from None

    def gate_path(self, gate: Gate) -> str:
        return f"{self._modules[gate.module_id].path}.{gate.label}"

    def route_for(self, gate: Gate) -> Route:
        try:
            return self._route_by_gate[self._gate_key(gate)]
        except KeyError:
            raise UnconnectedGate(
                f"gate {self.gate_path(gate)} is not connected") from None

    # -- message lifecycle ----------------------------------------------------

    def new_message(self, module_id: int, name: str, kind: int = 0,
                    byte_length: int = 0, payload: Optional[bytes] = None,
                    owner_kind: OwnerKind = OwnerKind.MODULE) -> Message:
        if byte_length < 0:
            raise SimulationError(f"negative byte_length {byte_length}")
        msg = Message(self._next_msg_id, name, kind,
                      creation_time=self._now, send_time=self._now,
                      arrival_time=self._now, owner=(owner_kind, module_id),
                      payload_bytes=payload, byte_length=byte_length)
        self._next_msg_id += 1
        self._messages[msg.id] = msg
        self.counters["created"] += 1
        return msg

    def delete_message(self, module_id: int, msg: Message,
                       owner_kind: OwnerKind = OwnerKind.MODULE):
        self._transfer(msg, {(owner_kind, module_id),
                             (OwnerKind.MODULE, module_id),
                             (OwnerKind.GUEST, module_id)},
                       (OwnerKind.DELETED, 0))
        self.counters["deleted"] += 1

    def _transfer(self, msg: Message, expected: set[Owner], new_owner: Owner):
        if msg.owner not in expected:
            self.counters["ownership_violations"] += 1
            raise NotOwner(
                f"{msg!r} is owned by {msg.owner[0].value}:{msg.owner[1]}, "
                f"expected one of {sorted((k.value, i) for k, i in expected)}")
        msg.owner = new_owner
        self.counters["transfers"] += 1

    def retag_guest_owned(self, msg: Message, module_id: int):
        """Mark a just-delivered message as held by the guest runtime."""
        self._transfer(msg, {(OwnerKind.MODULE, module_id)},
                       (OwnerKind.GUEST, module_id))

    # -- kernel operations -----------------------------------------------------

    def now(self) -> SimTime:
        return self._now

    def schedule_at(self, module_id: int, t: SimTime, msg: Message,
                    priority: int = 0):
        if t < self._now:
            raise SchedulingInPast(
                f"schedule_at({t}) while now={self._now} in "
                f"'{self._modules[module_id].path}'")
        self._transfer(msg, {(OwnerKind.MODULE, module_id),
                             (OwnerKind.GUEST, module_id)}, FES_OWNER)
        msg.send_time = self._now
        msg.arrival_time = t
        msg.src_gate = None
        msg.dst_gate = None
        self._fes.insert(t, priority, msg, module_id)

    def send(self, module_id: int, msg: Message, gate: str | Gate,
             index: Optional[int] = None, priority: int = 0):
        if isinstance(gate, str):
            gate = self.gate(module_id, gate, index)
        if gate.module_id != module_id:
            raise UnknownGate(
                f"gate {self.gate_path(gate)} does not belong to "
                f"'{self._modules[module_id].path}'")
        if gate.direction is not Direction.OUTPUT:
            raise WrongDirection(f"send on input gate {self.gate_path(gate)}")
        route = self.route_for(gate)
        arrival = SimTime(route.arrival_ticks(self._now.ticks, msg.byte_length))
        self._transfer(msg, {(OwnerKind.MODULE, module_id),
                             (OwnerKind.GUEST, module_id)}, FES_OWNER)
        msg.send_time = self._now
        msg.arrival_time = arrival
        msg.src_gate = gate
        msg.dst_gate = route.final_gate
        self._fes.insert(arrival, priority, msg, route.final_gate.module_id)

    def cancel_event(self, module_id: int, msg: Message,
                     owner_kind: OwnerKind = OwnerKind.MODULE) -> Message:
        entry = self._fes.lookup(msg.id)
        if entry is None or entry.msg.src_gate is not None \
                or entry.dst_module_id != module_id:
            raise NotScheduled(
                f"{msg!r} is not a pending self-message of "
                f"'{self._modules[module_id].path}'")
        self._fes.cancel(msg.id)
        self._transfer(msg, {FES_OWNER}, (owner_kind, module_id))
        return msg

    def get_parameter(self, module_id: int, name: str):
        entry = self._modules[module_id]
        if not entry._resolve_param(name):
            raise ParameterError(
                f"module '{entry.path}' has no parameter {name!r}")
        return entry.params[name]

    def parameter_kind(self, module_id: int, name: str) -> str:
        entry = self._modules[module_id]
        if not entry._resolve_param(name):
            raise ParameterError(
                f"module '{entry.path}' has no parameter {name!r}")
        return entry.param_kinds[name]

    def record_scalar(self, module_id: int, name: str, value):
        self.scalars.append((self._modules[module_id].path, name, value))

    def module_log(self, module_id: int, text: str):
        log.info("[%s] %s", self._modules[module_id].path, text)

    def rng_int(self, bound: int) -> int:
        return self.rng.randrange(bound)

    def tx_duration(self, module_id: int, gate: str | Gate, byte_length: int,
                    index: Optional[int] = None) -> SimTime:
        if isinstance(gate, str):
            gate = self.gate(module_id, gate, index)
        route = self.route_for(gate)
        total = 0
        for rate in route.datarates:
            total += transmission_ticks(byte_length, rate)
        return SimTime(total)

    # -- event loop -------------------------------------------------------------

    def _sorted_simple_modules(self) -> list[ModuleEntry]:
        return sorted((m for m in self._modules if m.is_simple),
                      key=lambda m: m.path)

    def initialize(self):
        if self._state == "building":
            self.seal()
        if self._state != "sealed":
            raise SimulationError(f"initialize() in state {self._state}")
        self._state = "initializing"
        for entry in self._sorted_simple_modules():
            try:
                entry.behavior.initialize()
            except SimulationError as exc:
                raise CallbackFailure(entry.path, "initialize", exc) from exc
            except Exception as exc:
                raise CallbackFailure(entry.path, "initialize", exc) from exc
        self._state = "ready"

    def step(self) -> Optional[EventRecord]:
        if self._state not in ("ready", "running"):
            raise SimulationError(f"step() in state {self._state}")
        self._state = "running"
        entry = self._fes.pop()
        if entry is None:
            return None
        self._now = entry.arrival
        msg = entry.msg
        dst = self._modules[entry.dst_module_id]
        self._transfer(msg, {FES_OWNER}, (OwnerKind.MODULE, dst.id))
        self.counters["delivered"] += 1
        if msg.src_gate is None:
            src_label = "self"
            dst_label = dst.path
        else:
            src_label = self.gate_path(msg.src_gate)
            dst_label = self.gate_path(msg.dst_gate)
        record = EventRecord(len(self.events) + 1, self._now, src_label,
                             dst_label, msg.name, msg.kind)
        self.events.append(record)
        if self.log_hook is not None:
            self.log_hook(record)
        try:
            dst.behavior.handle_message(msg)
        except SimulationError as exc:
            raise CallbackFailure(dst.path, "handle_message", exc) from exc
        except Exception as exc:
            raise CallbackFailure(dst.path, "handle_message", exc) from exc
        return record

    def run(self, time_limit: Optional[SimTime] = None,
            event_limit: Optional[int] = None) -> RunReport:
        """Dispatch events until exhaustion or a limit, then run finish().

        The time limit is inclusive: events with arrival_time equal to the
        limit still execute. On a callback failure the error propagates
        after finish() has been attempted; the partial report is attached
        to the exception as ``report``.
        """
        if self._state == "sealed":
            self.initialize()
        executed = 0
        events_before = len(self.events)
        reason = StopReason.EXHAUSTED
        detail = None
        try:
            while True:
                next_ticks = self._fes.peek_ticks()
                if next_ticks is None:
                    reason = StopReason.EXHAUSTED
                    break
                if time_limit is not None and next_ticks > time_limit.ticks:
                    reason = StopReason.TIME_LIMIT
                    break
                self.step()
                executed += 1
                if event_limit is not None and executed >= event_limit:
                    reason = StopReason.EVENT_LIMIT
                    break
        except CallbackFailure as failure:
            # The failing event was already dispatched and logged.
            executed = len(self.events) - events_before
            finish_note = self._finish_all(collect_only=True)
            reason = StopReason.ERROR
            detail = str(failure)
            if finish_note:
                detail += f"; partial finish: {finish_note}"
            failure.report = RunReport(executed, self._now, reason, detail)
            raise
        finish_note = self._finish_all(collect_only=True)
        if finish_note:
            failure = CallbackFailure("<finish>", "finish",
                                      SimulationError(finish_note))
            failure.report = RunReport(executed, self._now, StopReason.ERROR,
                                       finish_note)
            raise failure
        return RunReport(executed, self._now, reason, detail)

    def _finish_all(self, collect_only: bool = False) -> str:
        if self._state == "finished":
            return ""
        failures = []
        for entry in self._sorted_simple_modules():
            try:
                entry.behavior.finish()
            except Exception as exc:  # noqa: BLE001 - reported, not masked
                failures.append(f"finish failed in '{entry.path}': {exc}")
        self._state = "finished"
        return "; ".join(failures)

    # -- auditing ------------------------------------------------------------

    def audit_ownership(self) -> dict:
        """Count live messages per owner bucket and check conservation."""
        buckets = {kind: 0 for kind in OwnerKind}
        for msg in self._messages.values():
            buckets[msg.owner[0]] += 1
        in_fes = buckets[OwnerKind.FES]
        if in_fes != len(self._fes):
            raise SimulationError(
                f"FES ownership skew: {in_fes} tagged vs {len(self._fes)} queued")
        created = self.counters["created"]
        live = (buckets[OwnerKind.MODULE] + buckets[OwnerKind.GUEST] + in_fes)
        if created != live + buckets[OwnerKind.DELETED]:
            raise SimulationError(
                f"message conservation broken: created={created}, live={live}, "
                f"deleted={buckets[OwnerKind.DELETED]}")
        return {
            "created": created,
            "held_by_modules": buckets[OwnerKind.MODULE],
            "held_by_guest": buckets[OwnerKind.GUEST],
            "in_fes": in_fes,
            "deleted": buckets[OwnerKind.DELETED],
            "violations": self.counters["ownership_violations"],
        }
