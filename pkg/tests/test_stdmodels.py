"""Behavioral contracts of the native module library."""

import pytest

from gatesim.config import parse_config
from gatesim.elaboration import elaborate
from gatesim.errors import CallbackFailure, ProtocolViolation
from gatesim.kernel import Direction, Kernel, SimpleModule
from gatesim.simtime import SimTime, transmission_ticks
from gatesim.stdmodels import (
    FRAME_OVERHEAD_BYTES,
    FrameMeta,
    RegisterProtocol,
    default_registry,
    is_valid_frame,
    stdmodels_ast,
)
from gatesim.topology import merge, parse_topology


def build_net(topology_text, config_text, seed=1):
    ast = merge([stdmodels_ast(), parse_topology(topology_text)])
    eff = parse_config(config_text).effective()
    return elaborate(ast, eff, default_registry(), seed=seed)


TICTOC_NET = """
network Net {
    submodules:
        tic: TicToc;
        toc: TicToc;
    connections:
        tic.out --> { delay = 100ms; } --> toc.in;
        toc.out --> { delay = 100ms; } --> tic.in;
}
"""

TICTOC_CFG = "[General]\nnetwork = Net\nNet.tic.starter = true\n"


def test_tictoc_arithmetic_series():
    net = build_net(TICTOC_NET, TICTOC_CFG)
    report = net.kernel.run(event_limit=10)
    assert report.events_executed == 10
    arrivals = [r.time.ticks for r in net.kernel.events]
    assert arrivals == [(k + 1) * 10 ** 11 for k in range(10)]


def test_tictoc_single_event():
    net = build_net(TICTOC_NET, TICTOC_CFG)
    report = net.kernel.run(event_limit=1)
    assert report.final_time == SimTime.millis(100)


def test_tictoc_zero_delay_ordered_by_seq():
    net = build_net(TICTOC_NET.replace("100ms", "0ms"), TICTOC_CFG)
    report = net.kernel.run(event_limit=5)
    assert all(r.time.ticks == 0 for r in net.kernel.events)
    # Alternating deliveries, in insertion order.
    dsts = [r.dst for r in net.kernel.events]
    assert dsts == ["Net.toc.in", "Net.tic.in", "Net.toc.in", "Net.tic.in",
                    "Net.toc.in"]


@pytest.mark.parametrize("starters", [(False, False), (True, True)])
def test_tictoc_starter_misconfiguration(starters):
    cfg = "[General]\nnetwork = Net\n"
    cfg += f"Net.tic.starter = {str(starters[0]).lower()}\n"
    cfg += f"Net.toc.starter = {str(starters[1]).lower()}\n"
    net = build_net(TICTOC_NET, cfg)
    with pytest.raises(CallbackFailure) as exc_info:
        net.kernel.initialize()
    assert isinstance(exc_info.value.cause, ProtocolViolation)


PING_NET = """
network Net {
    submodules:
        client: PingClient;
        server: PingServer;
    connections:
        client.out --> { delay = %s; } --> server.in;
        server.out --> { delay = %s; } --> client.in;
}
"""


def _scalars(kernel):
    return {(path, name): value for path, name, value in kernel.scalars}


def test_ping_symmetric_rtt():
    net = build_net(PING_NET % ("5ms", "5ms"),
                    "[General]\nnetwork = Net\nNet.client.count = 3\n"
                    "Net.client.interval = 20ms\n")
    net.kernel.run()
    scalars = _scalars(net.kernel)
    expected = 10 ** 10  # 2 x 5 ms in ticks
    assert scalars[("Net.client", "rtt_min")] == expected
    assert scalars[("Net.client", "rtt_avg")] == expected
    assert scalars[("Net.client", "rtt_max")] == expected


def test_ping_asymmetric_rtt():
    net = build_net(PING_NET % ("2ms", "3ms"),
                    "[General]\nnetwork = Net\nNet.client.count = 2\n"
                    "Net.client.interval = 10ms\n")
    net.kernel.run()
    scalars = _scalars(net.kernel)
    assert scalars[("Net.client", "rtt_min")] == 5 * 10 ** 9
    assert scalars[("Net.client", "rtt_max")] == 5 * 10 ** 9


def test_ping_count_zero_no_scalars():
    net = build_net(PING_NET % ("5ms", "5ms"),
                    "[General]\nnetwork = Net\nNet.client.count = 0\n")
    report = net.kernel.run()
    assert report.events_executed == 0
    assert not any(name.startswith("rtt")
                   for _, name, _ in net.kernel.scalars)


def test_ping_unknown_seq_aborts():
    class RoguePinger(SimpleModule):
        def initialize(self):
            pong = self.new_message("pong-7", kind=7)
            self.send(pong, "out")

        def handle_message(self, msg):
            pass

    from gatesim.stdmodels import PingClient
    k = Kernel()
    k.add_module("Net")
    cid = k.add_module("Net.client", PingClient(),
                       {"interval": SimTime.millis(10), "count": 1},
                       {"interval": "time", "count": "int"})
    rid = k.add_module("Net.rogue", RoguePinger())
    k.connect(k.add_gate(cid, "out", Direction.OUTPUT),
              k.add_gate(rid, "in", Direction.INPUT), SimTime.millis(1))
    k.connect(k.add_gate(rid, "out", Direction.OUTPUT),
              k.add_gate(cid, "in", Direction.INPUT), SimTime.millis(1))
    k.seal()
    k.initialize()
    with pytest.raises(CallbackFailure) as exc_info:
        k.run()
    assert isinstance(exc_info.value.cause, ProtocolViolation)
    assert "unknown seq" in str(exc_info.value)


ETHER_NET = """
network Net {
    submodules:
        client: EtherClientHost;
        echo: EtherHostN;
    connections:
        client.port_out --> { delay = 1ms; datarate = 10Mbps; } --> echo.port_in;
        echo.port_out --> { delay = 1ms; datarate = 10Mbps; } --> client.port_in;
}
"""

ETHER_CFG = """
[General]
network = Net
**.app.protocol_id = 0x88B5
Net.client.app.own_addr = 0x0A
Net.client.app.peer_addr = 0x0B
Net.client.app.count = %d
Net.client.app.interval = 2ms
"""


def test_ether_echo_round_trip_timing():
    net = build_net(ETHER_NET, ETHER_CFG % 1)
    k = net.kernel
    k.run()
    scalars = _scalars(k)
    assert scalars[("Net.client.app", "echoes_received")] == 1
    assert scalars[("Net.echo.llc", "unregistered_drops")] == 0
    # Echo arrives after two propagation delays plus two serializations of
    # a 64-byte frame at 10 Mbit/s (51.2 us each), all zero-delay inside.
    echo_events = [r for r in k.events if r.dst == "Net.client.app.lower_in"]
    assert len(echo_events) == 1
    tx = transmission_ticks(64, 10 ** 7)
    assert tx == 51_200_000
    assert echo_events[0].time.ticks == 2 * 10 ** 9 + 2 * tx


def test_ether_echo_swaps_addresses_and_preserves_payload():
    seen = {}

    class Probe(SimpleModule):
        gate_decls = [("lower_in", "input"), ("lower_out", "output")]
        param_decls = {"protocol_id": ("int",)}

        def initialize(self):
            reg = self.new_message("register")
            reg.control_info = RegisterProtocol(self.par("protocol_id"))
            self.send(reg, "lower_out")
            frame = self.new_message("probe", kind=1, byte_length=100,
                                     payload=b"payload-bytes")
            frame.control_info = FrameMeta(0xAA, 0xBB, self.par("protocol_id"))
            self.send(frame, "lower_out")

        def handle_message(self, msg):
            seen["info"] = msg.control_info
            seen["payload"] = msg.payload_bytes
            seen["byte_length"] = msg.byte_length
            self.delete_message(msg)

    registry = default_registry()
    registry.register("Probe", Probe)
    ast = merge([stdmodels_ast(), parse_topology("""
network Net {
    submodules:
        probe: Probe;
        llcP: LinkLayer;
        queueP: DropTailQueue;
        macP: SimpleMac;
        echo: EtherHostN;
    connections:
        probe.lower_out --> llcP.upper_in[0];
        llcP.upper_out[0] --> probe.lower_in;
        llcP.lower_out --> queueP.in;
        queueP.out --> macP.upper_in;
        macP.grant_out --> queueP.ctrl_in;
        macP.upper_out --> llcP.lower_in;
        macP.lower_out --> { delay = 1ms; datarate = 10Mbps; } --> echo.port_in;
        echo.port_out --> { delay = 1ms; datarate = 10Mbps; } --> macP.lower_in;
}
""")])
    eff = parse_config("[General]\nnetwork = Net\n**.protocol_id = 0x88B5\n"
                       ).effective()
    net = elaborate(ast, eff, registry)
    net.kernel.run()
    assert seen["info"] == FrameMeta(0xBB, 0xAA, 0x88B5)
    assert seen["payload"] == b"payload-bytes"
    assert seen["byte_length"] == 100


def test_echo_of_minimum_frame_stays_valid():
    # 46-byte payload encapsulates to exactly 64 bytes; the echo of a
    # 64-byte frame is again 64 bytes.
    net = build_net(ETHER_NET, ETHER_CFG % 1)
    k = net.kernel
    k.run()
    wire_events = [r for r in k.events
                   if r.src.endswith("mac.lower_out") and r.msg_name == "frame-0"]
    assert len(wire_events) == 2  # outbound and echoed


def test_mac_pads_small_payload_to_minimum():
    cfg = ETHER_CFG % 1 + "Net.client.app.payload_bytes = 10\n"
    net = build_net(ETHER_NET, cfg)
    k = net.kernel
    client_mac = k.module_by_path("Net.client.mac").id
    seen_lengths = []
    original = k.send

    def spy(module_id, msg, gate, index=None, priority=0):
        if module_id == client_mac and getattr(gate, "name", gate) == "lower_out":
            seen_lengths.append(msg.byte_length)
        return original(module_id, msg, gate, index, priority)

    k.send = spy
    k.run()
    assert seen_lengths[0] == 64


def test_full_size_frame_serialization():
    # 1232-byte payload encapsulates to a 1250-byte frame: 1 ms on a
    # 10 Mbit/s wire plus 1 ms propagation, so the frame sent at t=0
    # lands at the peer MAC exactly 2 ms later.
    cfg = ETHER_CFG % 1 + "Net.client.app.payload_bytes = 1232\n"
    net = build_net(ETHER_NET, cfg)
    k = net.kernel
    k.run()
    arrival = [r for r in k.events if r.dst == "Net.echo.mac.lower_in"]
    assert arrival[0].time.ticks == 2 * 10 ** 9


def test_mac_serializes_back_to_back_frames():
    # Two frames enqueued at once: the second leaves one tx-duration later.
    cfg = ETHER_CFG % 2
    cfg = cfg.replace("interval = 2ms", "interval = 0ms")
    net = build_net(ETHER_NET, cfg)
    k = net.kernel
    k.run()
    wire = [r for r in k.events
            if r.src == "Net.client.mac.lower_out"]
    tx = transmission_ticks(64, 10 ** 7)
    assert wire[0].msg_name == "frame-0"
    assert wire[1].msg_name == "frame-1"
    assert wire[1].time.ticks - wire[0].time.ticks == tx


def test_queue_overflow_drops_and_counts():
    cfg = (ETHER_CFG % 5).replace("interval = 2ms", "interval = 0ms")
    cfg += "**.queue.capacity = 1\n"
    net = build_net(ETHER_NET, cfg)
    k = net.kernel
    k.run()
    scalars = _scalars(k)
    # 5 frames at t=0: 1 goes straight through, 1 queues, 3 drop.
    assert scalars[("Net.client.queue", "queue_drops")] == 3
    assert scalars[("Net.client.app", "echoes_received")] == 2
    audit = k.audit_ownership()
    assert audit["violations"] == 0


def test_unregistered_ethertype_dropped_with_counter():
    cfg = ETHER_CFG % 1
    cfg = cfg.replace("**.app.protocol_id = 0x88B5",
                      "Net.client.app.protocol_id = 0x88B5\n"
                      "Net.echo.app.protocol_id = 0x9999")
    net = build_net(ETHER_NET, cfg)
    k = net.kernel
    k.run()
    scalars = _scalars(k)
    assert scalars[("Net.echo.llc", "unregistered_drops")] == 1
    assert scalars[("Net.client.app", "echoes_received")] == 0


def test_upper_payload_without_control_info_aborts():
    class Naked(SimpleModule):
        gate_decls = [("lower_in", "input"), ("lower_out", "output")]

        def initialize(self):
            self.send(self.new_message("oops", byte_length=100), "lower_out")

        def handle_message(self, msg):
            pass

    registry = default_registry()
    registry.register("Naked", Naked)
    ast = merge([stdmodels_ast(), parse_topology("""
network Net {
    submodules:
        app: Naked;
        llc: LinkLayer;
        queue: DropTailQueue;
        mac: SimpleMac;
        peer: EtherHostN;
    connections:
        app.lower_out --> llc.upper_in[0];
        llc.upper_out[0] --> app.lower_in;
        llc.lower_out --> queue.in;
        queue.out --> mac.upper_in;
        mac.grant_out --> queue.ctrl_in;
        mac.upper_out --> llc.lower_in;
        mac.lower_out --> { delay = 1ms; } --> peer.port_in;
        peer.port_out --> { delay = 1ms; } --> mac.lower_in;
}
""")])
    eff = parse_config("[General]\nnetwork = Net\n**.protocol_id = 7\n"
                       ).effective()
    net = elaborate(ast, eff, registry)
    with pytest.raises(CallbackFailure) as exc_info:
        net.kernel.run()
    assert isinstance(exc_info.value.cause, ProtocolViolation)


def test_duplicate_protocol_registration_aborts():
    text = """
network Net {
    submodules:
        a: EchoServer;
        b: EchoServer;
        llc: LinkLayer2;
        queue: DropTailQueue;
        mac: SimpleMac;
        peer: EtherHostN;
    connections:
        a.lower_out --> llc.upper_in[0];
        llc.upper_out[0] --> a.lower_in;
        b.lower_out --> llc.upper_in[1];
        llc.upper_out[1] --> b.lower_in;
        llc.lower_out --> queue.in;
        queue.out --> mac.upper_in;
        mac.grant_out --> queue.ctrl_in;
        mac.upper_out --> llc.lower_in;
        mac.lower_out --> { delay = 1ms; } --> peer.port_in;
        peer.port_out --> { delay = 1ms; } --> mac.lower_in;
}
simple LinkLayer2 {
    gates:
        input upper_in[2];
        output upper_out[2];
        input lower_in;
        output lower_out;
}
"""
    registry = default_registry()
    from gatesim.stdmodels import LinkLayer
    registry.register("LinkLayer2", LinkLayer)
    ast = merge([stdmodels_ast(), parse_topology(text)])
    eff = parse_config("[General]\nnetwork = Net\n**.protocol_id = 7\n"
                       ).effective()
    net = elaborate(ast, eff, registry)
    with pytest.raises(CallbackFailure) as exc_info:
        net.kernel.run()
    assert "registered" in str(exc_info.value)


def test_frame_validity_helper():
    from gatesim.kernel import Message
    good = Message(0, "f", byte_length=64,
                   control_info=FrameMeta(1, 2, 0x800))
    assert is_valid_frame(good)
    good.byte_length = 1518
    assert is_valid_frame(good)
    good.byte_length = 1519
    assert not is_valid_frame(good)
    bare = Message(1, "f", byte_length=100)
    assert not is_valid_frame(bare)


def test_frame_meta_rejects_oversized_addresses():
    with pytest.raises(ProtocolViolation):
        FrameMeta(2 ** 48, 0, 0x800)
