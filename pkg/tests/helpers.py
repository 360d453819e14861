"""Shared test scaffolding: tiny hand-built networks and recording modules."""

from gatesim.kernel import Direction, Kernel, SimpleModule
from gatesim.simtime import SimTime, ZERO


class Recorder(SimpleModule):
    """Collects every delivery as (time_ticks, msg_name); optional reactions."""

    def __init__(self, on_message=None):
        self.seen = []
        self.on_message = on_message

    def handle_message(self, msg):
        self.seen.append((self.now().ticks, msg.name))
        if self.on_message is not None:
            self.on_message(self, msg)


class Bouncer(SimpleModule):
    """Re-sends every received message on its 'out' gate immediately."""

    def __init__(self, start=False):
        self.start = start

    def initialize(self):
        if self.start:
            self.send(self.new_message("token"), "out")

    def handle_message(self, msg):
        self.send(msg, "out")


def two_module_net(a_behavior, b_behavior, delay=SimTime.millis(100),
                   datarate=None, seed=1):
    """Net.a.out -> Net.b.in and Net.b.out -> Net.a.in, symmetric delay."""
    k = Kernel(seed=seed)
    k.add_module("Net")
    ida = k.add_module("Net.a", a_behavior)
    idb = k.add_module("Net.b", b_behavior)
    a_in = k.add_gate(ida, "in", Direction.INPUT)
    a_out = k.add_gate(ida, "out", Direction.OUTPUT)
    b_in = k.add_gate(idb, "in", Direction.INPUT)
    b_out = k.add_gate(idb, "out", Direction.OUTPUT)
    k.connect(a_out, b_in, delay, datarate)
    k.connect(b_out, a_in, delay, datarate)
    k.seal()
    return k, ida, idb
