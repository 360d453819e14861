"""Message wrapper over an opaque host handle.

A GuestMessage never copies message contents: every accessor delegates to
a kernel export. Holding one past the end of the run raises StaleHandle
on the host side, which is deliberate - guest state must not outlive
finish().
"""

from typing import NamedTuple, Optional, Union

from . import _stubs as sim


class RegisterInfo(NamedTuple):
    protocol_id: int


class FrameInfo(NamedTuple):
    src_addr: int
    dst_addr: int
    ethertype: int


class GuestMessage:
    """View of one host-side message, addressed by handle."""

    __slots__ = ("handle",)

    def __init__(self, handle: int):
        self.handle = handle

    def __eq__(self, other):
        return isinstance(other, GuestMessage) and other.handle == self.handle

    def __hash__(self):
        return hash(self.handle)

    def __repr__(self):
        return f"GuestMessage(handle={self.handle})"

    # -- fields -----------------------------------------------------------

    @property
    def name(self) -> str:
        return sim.message_name(self.handle)

    @name.setter
    def name(self, value: str):
        sim.message_set_name(self.handle, value)

    @property
    def kind(self) -> int:
        return sim.message_kind(self.handle)

    @kind.setter
    def kind(self, value: int):
        sim.message_set_kind(self.handle, value)

    @property
    def byte_length(self) -> int:
        return sim.message_byte_length(self.handle)

    @byte_length.setter
    def byte_length(self, value: int):
        sim.message_set_byte_length(self.handle, value)

    @property
    def payload(self) -> str:
        return sim.message_payload(self.handle)

    @payload.setter
    def payload(self, value: str):
        sim.message_set_payload(self.handle, value)

    @property
    def creation_time(self) -> int:
        return sim.message_creation_time(self.handle)

    @property
    def send_time(self) -> int:
        return sim.message_send_time(self.handle)

    @property
    def arrival_time(self) -> int:
        return sim.message_arrival_time(self.handle)

    # -- control info -------------------------------------------------------

    def set_register_protocol(self, protocol_id: int):
        sim.set_control_info_register(self.handle, protocol_id)

    def set_frame_meta(self, src_addr: int, dst_addr: int, ethertype: int):
        sim.set_control_info_frame(self.handle, src_addr, dst_addr, ethertype)

    def control_info(self) -> Optional[Union[RegisterInfo, FrameInfo]]:
        kind = sim.control_info_kind(self.handle)
        if kind == "register":
            return RegisterInfo(
                sim.control_info_field(self.handle, "protocol_id"))
        if kind == "frame":
            return FrameInfo(
                sim.control_info_field(self.handle, "src_addr"),
                sim.control_info_field(self.handle, "dst_addr"),
                sim.control_info_field(self.handle, "ethertype"))
        return None
