"""Native module library: TicToc, ping, and an Ethernet-style stack.

The Ethernet-style pieces model a host as {app, link layer, queue, MAC}.
Applications talk to the link layer with control-info records: a
RegisterProtocol registers an upper protocol for demultiplexing, a
FrameMeta carries addressing for encapsulation. The MAC serializes frames
at the attached link's datarate and paces the queue with explicit grant
messages, so every state change is an ordinary logged event.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources

from .elaboration import ModuleTypeRegistry
from .errors import ProtocolViolation
from .kernel import Message, SimpleModule
from .simtime import SimTime
from .topology import TopologyAst, parse_topology

MIN_FRAME_BYTES = 64
MAX_FRAME_BYTES = 1518
FRAME_OVERHEAD_BYTES = 18  # header (14) + FCS (4)

_MAX_ADDR = 2 ** 48 - 1


@dataclass(frozen=True)
class RegisterProtocol:
    """Control info: bind an upper protocol id to the sending gate."""

    protocol_id: int


@dataclass(frozen=True)
class FrameMeta:
    """Control info: addressing for an Ethernet-style frame."""

    src_addr: int
    dst_addr: int
    ethertype: int

    def __post_init__(self):
        for label, addr in (("src", self.src_addr), ("dst", self.dst_addr)):
            if not 0 <= addr <= _MAX_ADDR:
                raise ProtocolViolation(
                    f"{label} address {addr:#x} outside 48 bits")

    def swapped(self) -> "FrameMeta":
        return FrameMeta(self.dst_addr, self.src_addr, self.ethertype)


@dataclass(frozen=True)
class PingRecord:
    seq: int
    sent_at: SimTime
    received_at: SimTime

    @property
    def rtt(self) -> SimTime:
        return self.received_at - self.sent_at


def is_valid_frame(msg: Message) -> bool:
    return (isinstance(msg.control_info, FrameMeta)
            and MIN_FRAME_BYTES <= msg.byte_length <= MAX_FRAME_BYTES)


class TicToc(SimpleModule):
    """Bounces one token between two connected instances forever."""

    gate_decls = [("in", "input"), ("out", "output")]
    param_decls = {"starter": ("bool", False), "delay": ("time",
                                                         SimTime.millis(100))}

    def initialize(self):
        self._check_pairing()
        if self.par("starter"):
            self.send(self.new_message("token"), "out")

    def _check_pairing(self):
        kernel = self._kernel
        route = kernel.route_for(kernel.gate(self._module_id, "out"))
        peer = kernel.module(route.final_gate.module_id).behavior
        if isinstance(peer, TicToc):
            starters = int(self.par("starter")) + int(peer.par("starter"))
            if starters != 1:
                raise ProtocolViolation(
                    f"tictoc pair {self.path} needs exactly one starter, "
                    f"found {starters}")

    def handle_message(self, msg):
        self.send(msg, "out")


class PingClient(SimpleModule):
    """Sends count pings, one every interval, and records RTT scalars."""

    gate_decls = [("in", "input"), ("out", "output")]
    param_decls = {"interval": ("time", SimTime.seconds(1)),
                   "count": ("int", 0)}

    def initialize(self):
        self.next_seq = 0
        self.outstanding: dict[int, SimTime] = {}
        self.records: list[PingRecord] = []
        if self.par("count") > 0:
            self.timer = self.new_message("ping-timer")
            self.schedule_at(self.now(), self.timer)

    def handle_message(self, msg):
        if msg.src_gate is None:
            seq = self.next_seq
            self.next_seq += 1
            ping = self.new_message(f"ping-{seq}", kind=seq)
            self.outstanding[seq] = self.now()
            self.send(ping, "out")
            if self.next_seq < self.par("count"):
                self.schedule_at(self.now() + self.par("interval"), msg)
            return
        seq = msg.kind
        if seq not in self.outstanding:
            raise ProtocolViolation(
                f"{self.path} received pong with unknown seq {seq}")
        sent_at = self.outstanding.pop(seq)
        self.records.append(PingRecord(seq, sent_at, self.now()))
        self.delete_message(msg)

    def finish(self):
        if not self.records:
            return
        rtts = [r.rtt.ticks for r in self.records]
        total = sum(rtts)
        avg = total // len(rtts) if total % len(rtts) == 0 \
            else total / len(rtts)
        self.record_scalar("rtt_min", min(rtts))
        self.record_scalar("rtt_avg", avg)
        self.record_scalar("rtt_max", max(rtts))


class PingServer(SimpleModule):
    """Answers each ping with a pong of the same sequence number."""

    gate_decls = [("in", "input"), ("out", "output")]

    def handle_message(self, msg):
        pong = self.new_message(f"pong-{msg.kind}", kind=msg.kind)
        self.send(pong, "out")
        self.delete_message(msg)


class LinkLayer(SimpleModule):
    """Registers upper protocols and demultiplexes frames by ethertype."""

    gate_decls = [("upper_in", "input", 1), ("upper_out", "output", 1),
                  ("lower_in", "input"), ("lower_out", "output")]

    def initialize(self):
        self.demux: dict[int, int] = {}
        self.unregistered_drops = 0

    def handle_message(self, msg):
        gate = msg.dst_gate
        if gate.name == "upper_in":
            self._from_upper(msg, gate.index or 0)
        else:
            self._from_lower(msg)

    def _from_upper(self, msg, gate_index):
        info = msg.control_info
        if isinstance(info, RegisterProtocol):
            bound = self.demux.get(info.protocol_id)
            if bound is not None and bound != gate_index:
                raise ProtocolViolation(
                    f"{self.path}: protocol {info.protocol_id:#x} registered "
                    f"from gates {bound} and {gate_index}")
            self.demux[info.protocol_id] = gate_index
            self.delete_message(msg)
            return
        if isinstance(info, FrameMeta):
            msg.byte_length += FRAME_OVERHEAD_BYTES
            self.send(msg, "lower_out")
            return
        raise ProtocolViolation(
            f"{self.path}: upper-layer payload without control info")

    def _from_lower(self, msg):
        info = msg.control_info
        if not isinstance(info, FrameMeta):
            raise ProtocolViolation(
                f"{self.path}: frame from below without frame metadata")
        gate_index = self.demux.get(info.ethertype)
        if gate_index is None:
            self.unregistered_drops += 1
            self.delete_message(msg)
            return
        msg.byte_length -= FRAME_OVERHEAD_BYTES
        self.send(msg, "upper_out", index=gate_index)

    def finish(self):
        self.record_scalar("unregistered_drops", self.unregistered_drops)


class DropTailQueue(SimpleModule):
    """FIFO between link layer and MAC, paced by MAC grant messages."""

    gate_decls = [("in", "input"), ("out", "output"), ("ctrl_in", "input")]
    param_decls = {"capacity": ("int", 0)}  # 0 = unbounded

    def initialize(self):
        self.pending: deque[Message] = deque()
        self.credits = 0
        self.drops = 0

    def handle_message(self, msg):
        if msg.dst_gate.name == "ctrl_in":
            self.delete_message(msg)
            self.credits += 1
            if self.pending:
                self.credits -= 1
                self.send(self.pending.popleft(), "out")
            return
        if self.credits > 0 and not self.pending:
            self.credits -= 1
            self.send(msg, "out")
            return
        capacity = self.par("capacity")
        if capacity and len(self.pending) >= capacity:
            self.drops += 1
            self.delete_message(msg)
            return
        self.pending.append(msg)

    def finish(self):
        self.record_scalar("queue_drops", self.drops)


class SimpleMac(SimpleModule):
    """Serializes frames onto the wire and pads them to the minimum size."""

    gate_decls = [("upper_in", "input"), ("upper_out", "output"),
                  ("grant_out", "output"), ("lower_in", "input"),
                  ("lower_out", "output")]

    def initialize(self):
        self.busy = False
        self.send(self.new_message("mac-grant"), "grant_out")

    def handle_message(self, msg):
        if msg.src_gate is None:  # transmission finished
            self.busy = False
            self.delete_message(msg)
            self.send(self.new_message("mac-grant"), "grant_out")
            return
        if msg.dst_gate.name == "upper_in":
            if self.busy:
                raise ProtocolViolation(
                    f"{self.path}: frame pushed while transmitting")
            msg.byte_length = max(msg.byte_length, MIN_FRAME_BYTES)
            if not is_valid_frame(msg):
                raise ProtocolViolation(
                    f"{self.path}: invalid outgoing frame "
                    f"({msg.byte_length} bytes)")
            duration = self.tx_duration("lower_out", msg.byte_length)
            self.busy = True
            self.send(msg, "lower_out")
            self.schedule_at(self.now() + duration, self.new_message("txend"))
            return
        if not is_valid_frame(msg):
            raise ProtocolViolation(
                f"{self.path}: invalid incoming frame "
                f"({msg.byte_length} bytes)")
        self.send(msg, "upper_out")


class EchoServer(SimpleModule):
    """Echoes every received frame back with src/dst addresses swapped."""

    gate_decls = [("lower_in", "input"), ("lower_out", "output")]
    param_decls = {"protocol_id": ("int",)}

    def initialize(self):
        reg = self.new_message("register")
        reg.control_info = RegisterProtocol(self.par("protocol_id"))
        self.send(reg, "lower_out")

    def handle_message(self, msg):
        info = msg.control_info
        if not isinstance(info, FrameMeta):
            raise ProtocolViolation(
                f"{self.path}: payload without frame metadata")
        msg.control_info = info.swapped()
        self.send(msg, "lower_out")


class FrameClient(SimpleModule):
    """Originates frames to a fixed peer address and counts the echoes."""

    gate_decls = [("lower_in", "input"), ("lower_out", "output")]
    param_decls = {"protocol_id": ("int",), "own_addr": ("int",),
                   "peer_addr": ("int",), "count": ("int", 0),
                   "interval": ("time", SimTime.millis(1)),
                   "payload_bytes": ("int", 46)}

    def initialize(self):
        self.next_seq = 0
        self.echoes = 0
        reg = self.new_message("register")
        reg.control_info = RegisterProtocol(self.par("protocol_id"))
        self.send(reg, "lower_out")
        if self.par("count") > 0:
            self.schedule_at(self.now(), self.new_message("frame-timer"))

    def handle_message(self, msg):
        if msg.src_gate is None:
            seq = self.next_seq
            self.next_seq += 1
            payload = self.new_message(f"frame-{seq}", kind=seq,
                                       byte_length=self.par("payload_bytes"),
                                       payload=f"data-{seq}".encode())
            payload.control_info = FrameMeta(self.par("own_addr"),
                                             self.par("peer_addr"),
                                             self.par("protocol_id"))
            self.send(payload, "lower_out")
            if self.next_seq < self.par("count"):
                self.schedule_at(self.now() + self.par("interval"), msg)
            else:
                self.delete_message(msg)
            return
        self.echoes += 1
        self.delete_message(msg)

    def finish(self):
        self.record_scalar("echoes_received", self.echoes)


NATIVE_TYPES = {
    "TicToc": TicToc,
    "PingClient": PingClient,
    "PingServer": PingServer,
    "LinkLayer": LinkLayer,
    "DropTailQueue": DropTailQueue,
    "SimpleMac": SimpleMac,
    "EchoServer": EchoServer,
    "FrameClient": FrameClient,
}


def default_registry() -> ModuleTypeRegistry:
    registry = ModuleTypeRegistry()
    for name, cls in NATIVE_TYPES.items():
        registry.register(name, cls)
    return registry


def stdmodels_ast() -> TopologyAst:
    """Parse the packaged compound declarations (EtherHost variants)."""
    text = resources.files("gatesim").joinpath("stdmodels.top").read_text()
    return parse_topology(text)
