"""Guest-side kernel API stubs.

Generated by bindgen from a binding manifest; do not edit by hand. The
host bridge installs the export table at runtime and every wrapper
delegates through it by exported name.
"""

_EXPORTS = {}
_BIND_HOOK = None


class BindingNotInstalled(RuntimeError):
    """Guest code ran outside a live host bridge."""


def install(exports, bind_hook=None):
    global _BIND_HOOK
    _EXPORTS.clear()
    _EXPORTS.update(exports)
    _BIND_HOOK = bind_hook


def teardown():
    global _BIND_HOOK
    _EXPORTS.clear()
    _BIND_HOOK = None


def _call(name, *args):
    try:
        fn = _EXPORTS[name]
    except KeyError:
        raise BindingNotInstalled(
            f"kernel export {name!r} is not installed") from None
    return fn(*args)


class GuestModuleBase:
    """Host-paired module skeleton; instances are created by the bridge.

    The constructor immediately binds the peer pair on the host side, so
    direct instantiation outside a bridge-driven construction fails with
    a clear diagnostic instead of leaving an unbound handle around.
    """

    def __init__(self):
        if _BIND_HOOK is None:
            raise BindingNotInstalled(
                "no active host bridge; guest modules are constructed by "
                "the simulation host, not directly")
        self._host_handle = _BIND_HOOK(self)

    def _dispatch(self, which, msg_handle=None):
        if which == "initialize":
            self.initialize()
        elif which == "handle_message":
            self.handle_message(self._wrap_message(msg_handle))
        elif which == "finish":
            self.finish()
        else:
            raise ValueError(f"unknown callback {which!r}")

    def _wrap_message(self, msg_handle):
        return msg_handle

    def initialize(self):
        pass

    def handle_message(self, msg):
        raise NotImplementedError(
            type(self).__name__ + " must override handle_message(msg)")

    def finish(self):
        pass


def cancel_event(a0: int, a1: int) -> int:
    return _call("cancel_event", a0, a1)

def control_info_field(a0: int, a1: str) -> int:
    return _call("control_info_field", a0, a1)

def control_info_kind(a0: int) -> str:
    return _call("control_info_kind", a0)

def gate_lookup(a0: int, a1: str, a2: int) -> int:
    return _call("gate_lookup", a0, a1, a2)

def get_parameter_bool(a0: int, a1: str) -> bool:
    return _call("get_parameter_bool", a0, a1)

def get_parameter_double(a0: int, a1: str) -> float:
    return _call("get_parameter_double", a0, a1)

def get_parameter_int(a0: int, a1: str) -> int:
    return _call("get_parameter_int", a0, a1)

def get_parameter_kind(a0: int, a1: str) -> str:
    return _call("get_parameter_kind", a0, a1)

def get_parameter_string(a0: int, a1: str) -> str:
    return _call("get_parameter_string", a0, a1)

def get_parameter_time(a0: int, a1: str) -> int:
    return _call("get_parameter_time", a0, a1)

def log(a0: int, a1: str) -> None:
    _call("log", a0, a1)

def message_arrival_time(a0: int) -> int:
    return _call("message_arrival_time", a0)

def message_byte_length(a0: int) -> int:
    return _call("message_byte_length", a0)

def message_creation_time(a0: int) -> int:
    return _call("message_creation_time", a0)

def message_delete(a0: int, a1: int) -> None:
    _call("message_delete", a0, a1)

def message_kind(a0: int) -> int:
    return _call("message_kind", a0)

def message_name(a0: int) -> str:
    return _call("message_name", a0)

def message_new(a0: int, a1: str, a2: int) -> int:
    return _call("message_new", a0, a1, a2)

def message_payload(a0: int) -> str:
    return _call("message_payload", a0)

def message_send_time(a0: int) -> int:
    return _call("message_send_time", a0)

def message_set_byte_length(a0: int, a1: int) -> None:
    _call("message_set_byte_length", a0, a1)

def message_set_kind(a0: int, a1: int) -> None:
    _call("message_set_kind", a0, a1)

def message_set_name(a0: int, a1: str) -> None:
    _call("message_set_name", a0, a1)

def message_set_payload(a0: int, a1: str) -> None:
    _call("message_set_payload", a0, a1)

def now() -> int:
    return _call("now")

def record_scalar(a0: int, a1: str, a2: float) -> None:
    _call("record_scalar", a0, a1, a2)

def record_scalar_int(a0: int, a1: str, a2: int) -> None:
    _call("record_scalar_int", a0, a1, a2)

def rng_next_int(a0: int, a1: int) -> int:
    return _call("rng_next_int", a0, a1)

def schedule_at(a0: int, a1: int, a2: int, a3: int) -> None:
    _call("schedule_at", a0, a1, a2, a3)

def send(a0: int, a1: int, a2: int, a3: int) -> None:
    _call("send", a0, a1, a2, a3)

def set_control_info_frame(a0: int, a1: int, a2: int, a3: int) -> None:
    _call("set_control_info_frame", a0, a1, a2, a3)

def set_control_info_register(a0: int, a1: int) -> None:
    _call("set_control_info_register", a0, a1)
