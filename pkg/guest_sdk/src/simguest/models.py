"""Example guest models: twins of the native TicToc, ping, and echo apps.

Each mirrors its native counterpart step for step, which is what makes the
substitution tests meaningful: running a network with the guest version in
place of the native one produces an identical event trace.
"""

from .message import FrameInfo, GuestMessage
from .module import GuestSimpleModule


class TicTocGuest(GuestSimpleModule):
    """Bounces the token right back out; the starter emits it at t=0."""

    def initialize(self):
        if self.par("starter"):
            self.send(self.new_message("token"), "out")

    def handle_message(self, msg):
        self.send(msg, "out")


class PingClientGuest(GuestSimpleModule):
    """Sends count pings, one per interval, and records RTT scalars."""

    def initialize(self):
        self.next_seq = 0
        self.outstanding = {}
        self.rtts = []
        self.timer = None
        if self.par("count") > 0:
            self.timer = self.new_message("ping-timer")
            self.schedule_at(self.now(), self.timer)

    def handle_message(self, msg):
        if msg == self.timer:
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
            raise RuntimeError(f"received pong with unknown seq {seq}")
        self.rtts.append(self.now() - self.outstanding.pop(seq))
        self.delete_message(msg)

    def finish(self):
        if not self.rtts:
            return
        total = sum(self.rtts)
        avg = total // len(self.rtts) if total % len(self.rtts) == 0 \
            else total / len(self.rtts)
        self.record_scalar("rtt_min", min(self.rtts))
        self.record_scalar("rtt_avg", avg)
        self.record_scalar("rtt_max", max(self.rtts))


class EchoServerGuest(GuestSimpleModule):
    """Registers its protocol, then echoes frames with addresses swapped."""

    def initialize(self):
        reg = self.new_message("register")
        reg.set_register_protocol(self.par("protocol_id"))
        self.send(reg, "lower_out")

    def handle_message(self, msg):
        info = msg.control_info()
        if not isinstance(info, FrameInfo):
            raise RuntimeError("payload without frame metadata")
        msg.set_frame_meta(info.dst_addr, info.src_addr, info.ethertype)
        self.send(msg, "lower_out")
