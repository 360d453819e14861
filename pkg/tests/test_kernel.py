"""Kernel operations: clock, scheduling, sending, cancel, run, ownership."""

import pytest

from gatesim.errors import (
    CallbackFailure,
    NotOwner,
    NotScheduled,
    SchedulingInPast,
    UnconnectedGate,
    WrongDirection,
)
from gatesim.kernel import (
    Direction,
    Kernel,
    OwnerKind,
    SimpleModule,
    StopReason,
)
from gatesim.simtime import SimTime, ZERO

from helpers import Bouncer, Recorder, two_module_net


class Idle(SimpleModule):
    def handle_message(self, msg):
        pass


def test_clock_starts_at_zero():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    assert k.now() == ZERO


def test_now_during_dispatch_and_after_exhaustion():
    seen = []

    def observe(mod, msg):
        seen.append(mod.now().ticks)

    k, ida, _ = two_module_net(Recorder(observe), Recorder(observe))
    k.initialize()
    a = k.module(ida).behavior
    m1 = a.new_message("first")
    m2 = a.new_message("second")
    a.schedule_at(SimTime.seconds(1), m1)
    a.schedule_at(SimTime.seconds(3), m2)
    report = k.run(time_limit=SimTime.seconds(5))
    assert seen == [10 ** 12, 3 * 10 ** 12]
    assert report.stop_reason is StopReason.EXHAUSTED
    # Clock holds at the last dispatched event, not the limit.
    assert k.now() == SimTime.seconds(3)


def test_schedule_in_past_rejected():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    msg = a.new_message("timer")
    a.schedule_at(SimTime.seconds(2), msg)
    k.run()
    # now == 2s; the module owns msg again after delivery
    with pytest.raises(SchedulingInPast):
        a.schedule_at(SimTime.seconds(1), msg)


def test_double_schedule_raises_not_owner():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    msg = a.new_message("timer")
    a.schedule_at(SimTime.seconds(1), msg)
    with pytest.raises(NotOwner):
        a.schedule_at(SimTime.seconds(2), msg)
    assert k.counters["ownership_violations"] == 1


def test_send_arrival_with_delay_only():
    k, ida, idb = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    a.send(a.new_message("hello"), "out")
    k.run()
    assert k.module(idb).behavior.seen == [(10 ** 11, "hello")]


def test_send_arrival_with_datarate():
    # 1250 bytes at 10 Mbit/s is 1 ms on the wire, plus 1 ms propagation.
    k, ida, idb = two_module_net(Recorder(), Recorder(),
                                 delay=SimTime.millis(1), datarate=10 ** 7)
    k.initialize()
    a = k.module(ida).behavior
    a.send(a.new_message("pkt", byte_length=1250), "out")
    k.run()
    assert k.module(idb).behavior.seen == [(2 * 10 ** 9, "pkt")]


def test_send_on_input_gate_is_wrong_direction():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    with pytest.raises(WrongDirection):
        a.send(a.new_message("x"), "in")


def test_send_on_unconnected_gate():
    k = Kernel()
    ida = k.add_module("Solo", Recorder())
    k.add_gate(ida, "out", Direction.OUTPUT)
    k.seal()
    k.initialize()
    a = k.module(ida).behavior
    with pytest.raises(UnconnectedGate):
        a.send(a.new_message("x"), "out")


def test_cancel_then_nothing_fires():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    msg = a.new_message("timer")
    a.schedule_at(SimTime.seconds(1), msg)
    got = a.cancel_event(msg)
    assert got is msg and msg.owner == (OwnerKind.MODULE, ida)
    report = k.run()
    assert report.events_executed == 0
    with pytest.raises(NotScheduled):
        a.cancel_event(msg)


def test_cancel_then_reschedule_fires_once_at_later_time():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    msg = a.new_message("timer")
    a.schedule_at(SimTime.seconds(1), msg)
    a.cancel_event(msg)
    a.schedule_at(SimTime.seconds(2), msg)
    report = k.run()
    assert report.events_executed == 1
    assert a.seen == [(2 * 10 ** 12, "timer")]


def test_cancel_foreign_message_not_scheduled():
    k, ida, idb = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    b = k.module(idb).behavior
    sent = a.new_message("pkt")
    a.send(sent, "out")
    with pytest.raises(NotScheduled):
        b.cancel_event(sent)  # in FES, but not b's self-message


def test_step_exhausted_and_tiebreaks():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    assert k.step() is None
    a = k.module(ida).behavior
    m1 = a.new_message("later-seq")
    m2 = a.new_message("high-prio")
    a.schedule_at(SimTime.seconds(1), m1, priority=0)
    a.schedule_at(SimTime.seconds(1), m2, priority=-1)
    first = k.step()
    assert first.msg_name == "high-prio"
    assert k.step().msg_name == "later-seq"


def test_run_event_limit_tictoc():
    k, ida, idb = two_module_net(Bouncer(start=True), Bouncer())
    report = k.run(event_limit=10)
    assert report.events_executed == 10
    assert report.stop_reason is StopReason.EVENT_LIMIT
    assert report.final_time == SimTime.seconds(1)


def test_time_limit_is_inclusive():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    a.schedule_at(ZERO, a.new_message("at-zero"))
    report = k.run(time_limit=ZERO)
    assert report.events_executed == 1
    assert report.stop_reason is StopReason.EXHAUSTED


def test_time_limit_stops_before_later_events():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    a.schedule_at(SimTime.seconds(1), a.new_message("in-range"))
    a.schedule_at(SimTime.seconds(3), a.new_message("beyond"))
    report = k.run(time_limit=SimTime.seconds(2))
    assert report.events_executed == 1
    assert report.stop_reason is StopReason.TIME_LIMIT
    assert report.final_time == SimTime.seconds(1)


def test_empty_run_is_exhausted():
    k, *_ = two_module_net(Recorder(), Recorder())
    report = k.run()
    assert report.events_executed == 0
    assert report.stop_reason is StopReason.EXHAUSTED
    assert report.final_time == ZERO


def test_callback_failure_aborts_with_module_path():
    def boom(mod, msg):
        raise ValueError("exploded")

    k, ida, _ = two_module_net(Recorder(boom), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    a.schedule_at(SimTime.seconds(1), a.new_message("t"))
    with pytest.raises(CallbackFailure) as exc_info:
        k.run()
    failure = exc_info.value
    assert failure.module_path == "Net.a"
    assert failure.report.stop_reason is StopReason.ERROR
    assert "exploded" in failure.report.error_detail


def test_finish_called_in_path_order():
    order = []

    class Fin(SimpleModule):
        def __init__(self, tag):
            self.tag = tag

        def handle_message(self, msg):
            pass

        def finish(self):
            order.append(self.tag)

    k = Kernel()
    k.add_module("Net")
    k.add_module("Net.z", Fin("z"))
    k.add_module("Net.a", Fin("a"))
    k.add_module("Net.m", Fin("m"))
    k.seal()
    k.run()
    assert order == ["a", "m", "z"]


def test_event_log_lines():
    k, ida, idb = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    a.schedule_at(SimTime.millis(50), a.new_message("tick", kind=3))
    a.send(a.new_message("pkt", kind=7), "out")
    k.run()
    lines = [r.format_line() for r in k.events]
    assert lines == [
        "#1 t=0.05 self -> Net.a msg=tick kind=3",
        "#2 t=0.1 Net.a.out -> Net.b.in msg=pkt kind=7",
    ]


def test_message_ids_unique_and_conservation():
    k, ida, idb = two_module_net(Bouncer(start=True), Bouncer())
    k.run(event_limit=50)
    audit = k.audit_ownership()
    assert audit["violations"] == 0
    assert audit["created"] == 1
    assert audit["in_fes"] == 1  # token is in flight again after event 50


def test_delete_message_moves_to_deleted_bucket():
    k, ida, _ = two_module_net(Recorder(), Recorder())
    k.initialize()
    a = k.module(ida).behavior
    msg = a.new_message("junk")
    a.delete_message(msg)
    audit = k.audit_ownership()
    assert audit["deleted"] == 1
    with pytest.raises(NotOwner):
        a.send(msg, "out")


def test_clock_monotone_across_dispatches():
    stamps = []

    def observe(mod, msg):
        stamps.append(mod.now().ticks)
        if len(stamps) < 20:
            mod.send(msg, "out")

    k, ida, _ = two_module_net(Recorder(observe), Recorder(observe))
    k.initialize()
    a = k.module(ida).behavior
    a.send(a.new_message("m"), "out")
    k.run()
    assert stamps == sorted(stamps)
