"""Guest module base class with the convenience API.

The generated GuestModuleBase handles the construction handshake (binding
the host/guest peer pair before any subclass code runs) and callback
dispatch; this class layers the ergonomic surface on top. Method names
mirror the host-side module API one-to-one, so host and guest models read
the same.

Contract reminders: handle_message must return without blocking (schedule
a self-message to wait), and guest code must not touch SDK objects from
other threads - everything runs on the simulation's single event-loop
thread.
"""

from typing import Optional

from . import _stubs as sim
from .message import GuestMessage


class GuestSimpleModule(sim.GuestModuleBase):
    """Base class for guest simulation models."""

    def _wrap_message(self, msg_handle: int) -> GuestMessage:
        return GuestMessage(msg_handle)

    # -- module identity ----------------------------------------------------

    def gate(self, name: str, index: int = -1) -> int:
        return sim.gate_lookup(self._host_handle, name, index)

    # -- clock and scheduling --------------------------------------------------

    def now(self) -> int:
        return sim.now()

    def schedule_at(self, t_ticks: int, msg: GuestMessage, priority: int = 0):
        sim.schedule_at(self._host_handle, t_ticks, msg.handle, priority)

    def cancel_event(self, msg: GuestMessage) -> GuestMessage:
        return GuestMessage(
            sim.cancel_event(self._host_handle, msg.handle))

    # -- messaging ---------------------------------------------------------------

    def new_message(self, name: str, kind: int = 0) -> GuestMessage:
        return GuestMessage(sim.message_new(self._host_handle, name, kind))

    def delete_message(self, msg: GuestMessage):
        sim.message_delete(self._host_handle, msg.handle)

    def send(self, msg: GuestMessage, gate_name: str, index: int = -1,
             priority: int = 0):
        sim.send(self._host_handle, msg.handle,
                 sim.gate_lookup(self._host_handle, gate_name, index),
                 priority)

    # -- parameters -----------------------------------------------------------------

    def par(self, name: str):
        """Read a module parameter; time parameters come back as ticks."""
        kind = sim.get_parameter_kind(self._host_handle, name)
        getter = {
            "int": sim.get_parameter_int,
            "double": sim.get_parameter_double,
            "bool": sim.get_parameter_bool,
            "string": sim.get_parameter_string,
            "time": sim.get_parameter_time,
        }[kind]
        return getter(self._host_handle, name)

    # -- results and diagnostics --------------------------------------------------------

    def record_scalar(self, name: str, value):
        if isinstance(value, int):
            sim.record_scalar_int(self._host_handle, name, value)
        else:
            sim.record_scalar(self._host_handle, name, float(value))

    def log(self, text: str):
        sim.log(self._host_handle, text)

    def rng_int(self, bound: int) -> int:
        return sim.rng_next_int(self._host_handle, bound)
