"""Run configuration: units, sections, pattern matching, precedence."""

import pytest
from hypothesis import given, strategies as st

from gatesim.errors import ConfigError, DuplicateSection, UnknownUnit
from gatesim.config import parse_config, segments_match
from gatesim.simtime import SimTime


def test_basic_general_section():
    cfg = parse_config("[General]\nnetwork = TicToc\nsim-time-limit = 1s\n")
    eff = cfg.effective()
    assert eff.network == "TicToc"
    assert eff.time_limit.ticks == 10 ** 12
    assert eff.event_limit is None


def test_time_limit_requires_unit():
    with pytest.raises(UnknownUnit):
        parse_config("[General]\nsim-time-limit = 1\n")


def test_pattern_assignment_and_comments():
    cfg = parse_config("""
# configuration for the demo
[General]
network = Net   # trailing comment
**.delay = 100ms
Net.tic.starter = true
""")
    eff = cfg.effective()
    assert eff.network == "Net"
    assert eff.first_match("Net.tic", "delay").value == "100ms"
    assert eff.first_match("Net.a.b.c", "delay").value == "100ms"
    assert eff.first_match("Net.tic", "starter").value == "true"
    assert eff.first_match("Net.toc", "starter") is None


def test_first_match_in_file_order_wins():
    cfg = parse_config("""
[General]
Net.tic.delay = 1ms
**.delay = 2ms
""")
    eff = cfg.effective()
    assert eff.first_match("Net.tic", "delay").value == "1ms"
    assert eff.first_match("Net.toc", "delay").value == "2ms"


def test_section_inheritance_and_override():
    cfg = parse_config("""
[General]
network = Net
event-limit = 100
**.count = 1
[Fast]
event-limit = 10
[Deep:Fast]
seed = 9
**.count = 2
""")
    fast = cfg.effective("Fast")
    assert fast.event_limit == 10
    assert fast.network == "Net"
    deep = cfg.effective("Deep")
    assert deep.event_limit == 10
    assert deep.seed == 9
    # Child assignments take precedence over inherited ones.
    assert deep.first_match("Net.x", "count").value == "2"
    assert fast.first_match("Net.x", "count").value == "1"


def test_unknown_section_and_duplicates():
    cfg = parse_config("[General]\nnetwork = N\n")
    with pytest.raises(ConfigError):
        cfg.effective("Nope")
    with pytest.raises(DuplicateSection):
        parse_config("[A]\n[A]\n")
    with pytest.raises(ConfigError):
        parse_config("[General]\nnetwork = a\nnetwork = b\n")


def test_unknown_bare_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("[General]\nnetwrk = Typo\n")


def test_key_before_section_rejected():
    with pytest.raises(ConfigError):
        parse_config("network = N\n")


def test_guest_settings():
    cfg = parse_config("""
[General]
guest-runtime-path = /opt/sdk/src
guest-module-path = /a:/b
guest-sdk-check = off
""")
    eff = cfg.effective()
    assert eff.guest_runtime_path == "/opt/sdk/src"
    assert eff.guest_module_path == ("/a", "/b")
    assert eff.guest_sdk_check == "off"
    with pytest.raises(ConfigError):
        parse_config("[General]\nguest-sdk-check = maybe\n")


def test_segment_matching_semantics():
    assert segments_match(("**", "delay"), ("Net", "tic", "delay"))
    assert segments_match(("**", "delay"), ("Net", "delay"))
    assert segments_match(("*", "tic", "delay"), ("Net", "tic", "delay"))
    assert not segments_match(("*", "delay"), ("Net", "tic", "delay"))
    assert segments_match(("Net", "host[0]", "app", "n"),
                          ("Net", "host[0]", "app", "n"))
    assert segments_match(("Net", "**"), ("Net", "a", "b"))
    assert not segments_match(("Net", "tic"), ("Net", "toc"))


@given(st.lists(st.tuples(st.sampled_from(["a", "b", "c", "d"]),
                          st.integers(0, 9)), min_size=1, max_size=6,
                unique_by=lambda kv: kv[0]))
def test_nonoverlapping_permutation_invariance(pairs):
    """Permuting assignments for distinct parameters never changes results."""
    def build(order):
        lines = ["[General]"]
        lines += [f"Net.mod.{name} = {value}" for name, value in order]
        return parse_config("\n".join(lines)).effective()

    base = build(pairs)
    flipped = build(list(reversed(pairs)))
    for name, value in pairs:
        assert base.first_match("Net.mod", name).value == str(value)
        assert flipped.first_match("Net.mod", name).value == str(value)
