"""Guest models against the live host bridge (in-process)."""

import sys
from pathlib import Path

import pytest

from gatesim.bridge import Bridge, RuntimeConfig, RuntimeStatus
from gatesim.config import parse_config
from gatesim.elaboration import elaborate
from gatesim.errors import StaleHandle
from gatesim.stdmodels import default_registry, stdmodels_ast
from gatesim.topology import merge, parse_topology

SDK_SRC = str(Path(__file__).resolve().parents[1] / "src")


@pytest.fixture
def make_bridge():
    created = []

    def factory(kernel, module_paths=()):
        bridge = Bridge(kernel, RuntimeConfig(runtime_path=SDK_SRC,
                                              module_paths=module_paths))
        created.append(bridge)
        return bridge

    yield factory
    for bridge in created:
        bridge.teardown()
    for name in list(sys.modules):
        if name == "simguest" or name.startswith("simguest."):
            del sys.modules[name]


def _net(topology, config_text, seed=1):
    ast = merge([stdmodels_ast(), parse_topology(topology)])
    eff = parse_config(config_text).effective()
    return elaborate(ast, eff, default_registry(), seed=seed)


PAIR = """
network Net {{
    submodules:
        tic: {tic};
        toc: {toc};
    connections:
        tic.out --> {{ delay = 100ms; }} --> toc.in;
        toc.out --> {{ delay = 100ms; }} --> tic.in;
}}
"""

PAIR_CFG = ("[General]\nnetwork = Net\nNet.tic.starter = true\n"
            "Net.toc.starter = false\n")


def test_tictoc_guest_twin_trace(make_bridge):
    native = _net(PAIR.format(tic="TicToc", toc="TicToc"), PAIR_CFG)
    native.kernel.run(event_limit=40)
    native_lines = [r.format_line() for r in native.kernel.events]

    guest = _net(PAIR.format(tic="TicToc",
                             toc="guest:simguest.models.TicTocGuest"),
                 PAIR_CFG)
    bridge = make_bridge(guest.kernel)
    guest.instantiate_guests(bridge)
    guest.kernel.run(event_limit=40)
    guest_lines = [r.format_line() for r in guest.kernel.events]
    assert guest_lines == native_lines


PING = """
network Net {{
    submodules:
        client: {client};
        server: PingServer;
    connections:
        client.out --> {{ delay = 5ms; }} --> server.in;
        server.out --> {{ delay = 5ms; }} --> client.in;
}}
"""

PING_CFG = ("[General]\nnetwork = Net\nNet.client.count = 4\n"
            "Net.client.interval = 20ms\n")


def test_ping_guest_twin_scalars_and_trace(make_bridge):
    native = _net(PING.format(client="PingClient"), PING_CFG)
    native.kernel.run()
    native_lines = [r.format_line() for r in native.kernel.events]
    native_scalars = sorted(native.kernel.scalars)

    guest = _net(PING.format(client="guest:simguest.models.PingClientGuest"),
                 PING_CFG)
    bridge = make_bridge(guest.kernel)
    guest.instantiate_guests(bridge)
    guest.kernel.run()
    assert [r.format_line() for r in guest.kernel.events] == native_lines
    assert sorted(guest.kernel.scalars) == native_scalars
    rtts = {name: value for _, name, value in guest.kernel.scalars}
    assert rtts == {"rtt_min": 10 ** 10, "rtt_avg": 10 ** 10,
                    "rtt_max": 10 ** 10}


def test_two_modules_same_class_distinct_handles(make_bridge):
    net = _net("""
network Net {
    submodules:
        a: guest:simguest.models.TicTocGuest;
        b: guest:simguest.models.TicTocGuest;
    connections:
        a.out --> { delay = 1ms; } --> b.in;
        b.out --> { delay = 1ms; } --> a.in;
}
""", "[General]\nnetwork = Net\nNet.a.starter = true\nNet.b.starter = false\n")
    bridge = make_bridge(net.kernel)
    net.instantiate_guests(bridge)
    pairs = bridge.peer_pairs()
    assert len(pairs) == 2
    assert len({p.host_handle for p in pairs}) == 2
    assert len({p.guest_handle for p in pairs}) == 2


def test_constructor_reads_params_after_super_init(make_bridge, tmp_path):
    extra = tmp_path / "extra"
    extra.mkdir()
    (extra / "ctor_models.py").write_text("""
from simguest import GuestSimpleModule

created = []


class CtorReader(GuestSimpleModule):
    def __init__(self):
        super().__init__()
        created.append(self.par("label"))

    def handle_message(self, msg):
        pass
""")
    net = _net("""
network Net {
    submodules:
        only: guest:ctor_models.CtorReader;
}
""", '[General]\nnetwork = Net\nNet.only.label = "from-config"\n')
    bridge = make_bridge(net.kernel, module_paths=(str(extra),))
    net.instantiate_guests(bridge)
    import ctor_models
    assert ctor_models.created == ["from-config"]


def test_retained_message_is_stale_after_teardown(make_bridge, tmp_path):
    extra = tmp_path / "extra"
    extra.mkdir()
    (extra / "keeper_models.py").write_text("""
from simguest import GuestSimpleModule

kept = []


class Keeper(GuestSimpleModule):
    def handle_message(self, msg):
        kept.append(msg)
""")
    net = _net("""
network Net {
    submodules:
        tic: TicToc;
        keep: guest:keeper_models.Keeper;
    connections:
        tic.out --> { delay = 1ms; } --> keep.in;
        keep.out --> { delay = 1ms; } --> tic.in;
}
""", "[General]\nnetwork = Net\nNet.tic.starter = true\n")
    bridge = make_bridge(net.kernel, module_paths=(str(extra),))
    net.instantiate_guests(bridge)
    net.kernel.run(event_limit=1)
    import keeper_models
    (msg,) = keeper_models.kept
    assert msg.name == "token"
    bridge.teardown()
    with pytest.raises(StaleHandle):
        _ = msg.name
    assert bridge.status is RuntimeStatus.TORN_DOWN
