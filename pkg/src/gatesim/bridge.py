"""Host side of the guest-language boundary.

The bridge owns the guest runtime lifecycle, the opaque handle registry,
the peer pairing between host module shells and guest objects, callback
dispatch, and the eager verification of the exported kernel API against
the guest SDK's registration table.

The guest runtime here is an embedded interpreter context: the SDK package
is imported from ``guest-runtime-path``, its vendored registration table
is checked against the kernel's export registry, and only then does the
export dispatch table get installed. A run whose network has no guest
modules never starts any of this.

Objects cross the boundary by opaque 64-bit handle, never by copy. Handles
come from a never-reused counter, so a handle kept past teardown is
reliably detected as stale instead of aliasing a new object.
"""

from __future__ import annotations

import importlib
import os
import sys
import traceback
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Optional

from . import bindgen
from .errors import (
    BridgeError,
    GuestCallbackFailure,
    GuestConstructorFailure,
    ParameterError,
    RegistrationMismatch,
    RuntimeStartFailure,
    SimulationError,
    StaleHandle,
    UnknownGuestClass,
)
from .kernel import Gate, Kernel, Message, OwnerKind, SimpleModule
from .simtime import SimTime

SDK_PACKAGE = "simguest"


class RuntimeStatus(Enum):
    NOT_STARTED = "not-started"
    STARTING = "starting"
    READY = "ready"
    FAILED = "failed"
    TORN_DOWN = "torn-down"


_STATUS_ORDER = [RuntimeStatus.NOT_STARTED, RuntimeStatus.STARTING,
                 RuntimeStatus.READY, RuntimeStatus.FAILED,
                 RuntimeStatus.TORN_DOWN]


@dataclass(frozen=True)
class RuntimeConfig:
    """Where to find the guest SDK and guest model modules."""

    runtime_path: Optional[str] = None
    module_paths: tuple[str, ...] = ()
    check: str = "strict"  # strict | off
    sdk_package: str = SDK_PACKAGE


@dataclass(frozen=True)
class PeerPair:
    """Bidirectional binding between a host shell and a guest object."""

    host_handle: int
    guest_handle: int
    class_name: str


class HandleRegistry:
    """Sequential, never-reused 64-bit handles for boundary objects."""

    def __init__(self):
        self._next = 1
        self._live: dict[int, object] = {}
        self._retired: set[int] = set()

    def register(self, obj) -> int:
        handle = self._next
        self._next += 1
        self._live[handle] = obj
        return handle

    def lookup(self, handle: int):
        try:
            return self._live[handle]
        except KeyError:
            pass
        if handle in self._retired:
            raise StaleHandle(f"handle {handle} refers to a torn-down object")
        raise BridgeError(f"handle {handle} was never issued")

    def retire(self, handle: int):
        if handle in self._live:
            del self._live[handle]
            self._retired.add(handle)

    def retire_all(self):
        self._retired.update(self._live)
        self._live.clear()

    def live_count(self) -> int:
        return len(self._live)


@dataclass(frozen=True)
class Mismatch:
    exported_name: str
    reason: str  # unknown export | param mismatch | return mismatch
    expected: str
    found: str

    def __str__(self):
        return (f"{self.exported_name}: {self.reason} "
                f"(expected {self.expected}, found {self.found})")


@dataclass
class VerificationReport:
    matched: int
    total: int
    mismatches: list[Mismatch] = field(default_factory=list)


@dataclass(frozen=True)
class TableEntry:
    exported_name: str
    params: tuple[str, ...]
    returns: str

    def signature(self) -> str:
        return f"({','.join(self.params)}) -> {self.returns}"


class RegistrationTable:
    """The guest-visible export list: name, parameter and return signature."""

    def __init__(self, entries: list[TableEntry]):
        names = [e.exported_name for e in entries]
        if len(set(names)) != len(names):
            raise BridgeError("registration table has duplicate names")
        self.entries = entries

    @classmethod
    def parse(cls, text: str) -> "RegistrationTable":
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise BridgeError(
                    f"registration table line {lineno}: expected "
                    f"name<TAB>params<TAB>returns")
            name, params, returns = parts
            entries.append(TableEntry(
                name, tuple(p for p in params.split(",") if p), returns))
        return cls(entries)


def kernel_manifest() -> bindgen.ApiManifest:
    """Load the packaged manifest describing the exported kernel API."""
    text = resources.files("gatesim").joinpath("kernel_api.manifest") \
        .read_text(encoding="utf-8")
    return bindgen.load_manifest(text)


class GuestModuleShell(SimpleModule):
    """Host-side stand-in for a guest module.

    Created during elaboration like any native module; the guest peer is
    attached afterwards by Bridge.create_guest_module. All lifecycle
    callbacks dispatch across the bridge.
    """

    def __init__(self, class_spec: str):
        self.class_spec = class_spec
        self._bridge: Optional["Bridge"] = None
        self._pair: Optional[PeerPair] = None

    def _attach(self, bridge: "Bridge", pair: PeerPair):
        self._bridge = bridge
        self._pair = pair

    def _require_bridge(self) -> "Bridge":
        if self._bridge is None:
            raise BridgeError(
                f"guest module '{self.path}' ({self.class_spec}) has no "
                f"peer; instantiate_guests() was not run")
        return self._bridge

    def initialize(self):
        self._require_bridge().dispatch(self._pair, "initialize")

    def handle_message(self, msg):
        self._require_bridge().dispatch(self._pair, "handle_message", msg)

    def finish(self):
        self._require_bridge().dispatch(self._pair, "finish")


class Bridge:
    """Guest runtime lifecycle, peer map, dispatch, and exported API."""

    def __init__(self, kernel: Kernel, config: RuntimeConfig = RuntimeConfig()):
        self.kernel = kernel
        self.config = config
        self.status = RuntimeStatus.NOT_STARTED
        self.handles = HandleRegistry()
        self._pairs_by_host: dict[int, PeerPair] = {}
        self._pairs_by_guest: dict[int, PeerPair] = {}
        self._pending_bind: Optional[tuple[int, str]] = None
        self._msg_handles: dict[int, int] = {}
        self._gate_handles: dict[tuple, int] = {}
        self._binding = None
        self._inserted_paths: list[str] = []
        self._module_snapshot: set[str] = set()
        manifest = kernel_manifest()
        mapped = bindgen.map_api(manifest)
        self._export_signatures = {
            m.exported_name: (m.entry.params, m.entry.returns) for m in mapped}
        impls = self._make_export_impls()
        missing = set(self._export_signatures) - set(impls)
        extra = set(impls) - set(self._export_signatures)
        if missing or extra:
            raise SimulationError(
                f"export registry skew: missing={sorted(missing)} "
                f"extra={sorted(extra)}")
        self.exports = impls

    # -- runtime lifecycle ----------------------------------------------------

    def _set_status(self, status: RuntimeStatus):
        if _STATUS_ORDER.index(status) < _STATUS_ORDER.index(self.status):
            raise BridgeError(
                f"guest runtime cannot go {self.status.value} -> "
                f"{status.value}")
        self.status = status

    def init_guest_runtime(self):
        """Start the guest runtime once; later calls are no-ops when ready."""
        if self.status is RuntimeStatus.READY:
            return
        if self.status is not RuntimeStatus.NOT_STARTED:
            raise RuntimeStartFailure(
                f"guest runtime is {self.status.value}; cannot start")
        self._set_status(RuntimeStatus.STARTING)
        try:
            if self.config.runtime_path is not None:
                # The SDK must load from the configured location, not from
                # whatever happens to be importable; drop cached copies.
                for name in list(sys.modules):
                    if name.split(".")[0] == self.config.sdk_package:
                        del sys.modules[name]
            self._module_snapshot = set(sys.modules)
            for path in (self.config.runtime_path,
                         *self.config.module_paths):
                if path and path not in sys.path:
                    sys.path.insert(0, path)
                    self._inserted_paths.append(path)
            importlib.invalidate_caches()
            try:
                self._binding = importlib.import_module(
                    f"{self.config.sdk_package}.binding")
            except ImportError as exc:
                raise RuntimeStartFailure(
                    f"guest SDK '{self.config.sdk_package}' not importable "
                    f"(guest-runtime-path={self.config.runtime_path!r}): "
                    f"{exc}") from exc
            if self.config.runtime_path is not None:
                binding_file = os.path.realpath(
                    getattr(self._binding, "__file__", "") or "")
                root = os.path.realpath(self.config.runtime_path)
                if not binding_file.startswith(root + os.sep):
                    raise RuntimeStartFailure(
                        f"guest SDK resolved to {binding_file}, outside "
                        f"guest-runtime-path {self.config.runtime_path!r}")
            if self.config.check != "off":
                table = RegistrationTable.parse(
                    self._binding.registration_table_text())
                self.verify_registrations(table)
            self._binding.install(self.exports, self._bind_peer)
        except BridgeError:
            self._cleanup_runtime()
            self.status = RuntimeStatus.FAILED
            raise
        except Exception as exc:
            self._cleanup_runtime()
            self.status = RuntimeStatus.FAILED
            raise RuntimeStartFailure(
                f"guest runtime startup failed: {exc}") from exc
        self._set_status(RuntimeStatus.READY)

    def verify_registrations(self, table: RegistrationTable) \
            -> VerificationReport:
        """Compare a registration table against the kernel export registry.

        Checked eagerly at startup, before any event executes. Every
        discrepancy is collected and reported at once; one is enough to
        abort (it signals stub/kernel version skew).
        """
        mismatches: list[Mismatch] = []
        matched = 0
        for entry in table.entries:
            expected = self._export_signatures.get(entry.exported_name)
            if expected is None:
                mismatches.append(Mismatch(
                    entry.exported_name, "unknown export", "-",
                    entry.signature()))
                continue
            params, returns = expected
            if params != entry.params:
                mismatches.append(Mismatch(
                    entry.exported_name, "param mismatch",
                    f"({','.join(params)}) -> {returns}", entry.signature()))
            elif returns != entry.returns:
                mismatches.append(Mismatch(
                    entry.exported_name, "return mismatch",
                    f"({','.join(params)}) -> {returns}", entry.signature()))
            else:
                matched += 1
        if mismatches:
            raise RegistrationMismatch(mismatches)
        return VerificationReport(matched, len(table.entries))

    def teardown(self):
        """Retire every handle and drop the guest runtime.

        Export closures stay callable so that a guest object retained past
        this point fails with StaleHandle rather than something opaque.
        """
        if self.status is RuntimeStatus.TORN_DOWN:
            return
        self.handles.retire_all()
        self._cleanup_runtime()
        self.status = RuntimeStatus.TORN_DOWN

    def _cleanup_runtime(self):
        for path in self._inserted_paths:
            if path in sys.path:
                sys.path.remove(path)
        self._inserted_paths = []
        if self._module_snapshot:
            for name in list(sys.modules):
                if name in self._module_snapshot:
                    continue
                mod = sys.modules[name]
                file = getattr(mod, "__file__", None) or ""
                if name.split(".")[0] == self.config.sdk_package or any(
                        file.startswith(p) for p in
                        (self.config.runtime_path, *self.config.module_paths)
                        if p):
                    del sys.modules[name]
        self._binding = None

    # -- peer pairing -----------------------------------------------------------

    def create_guest_module(self, class_spec: str, module_id: int) -> PeerPair:
        """Instantiate a guest class and bind it to the module shell.

        The first call starts the guest runtime lazily. During guest
        construction the SDK base-class constructor calls back into
        _bind_peer, so the pair exists before any subclass code runs.
        """
        self.init_guest_runtime()
        shell = self.kernel.module(module_id).behavior
        if not isinstance(shell, GuestModuleShell):
            raise BridgeError(
                f"module id {module_id} is not a guest shell")
        try:
            cls = self._binding.resolve_class(class_spec)
        except Exception as exc:
            raise UnknownGuestClass(
                f"guest class '{class_spec}' not found (search path: "
                f"{list(self.config.module_paths) or 'guest SDK only'}): "
                f"{exc}") from exc
        host_handle = self.handles.register(shell)
        self._pending_bind = (host_handle, class_spec)
        try:
            guest_obj = cls()
        except Exception as exc:
            raise GuestConstructorFailure(
                f"constructor of '{class_spec}' raised:\n"
                f"{traceback.format_exc()}") from exc
        finally:
            self._pending_bind = None
        pair = self._pairs_by_host.get(host_handle)
        if pair is None or self.handles.lookup(pair.guest_handle) is not guest_obj:
            raise GuestConstructorFailure(
                f"'{class_spec}' did not complete the base-class binding "
                f"handshake")
        shell._attach(self, pair)
        return pair

    def _bind_peer(self, guest_obj) -> int:
        """Callback for the guest base-class constructor: bind the pair."""
        if self._pending_bind is None:
            raise BridgeError(
                "no guest construction in progress; modules are created by "
                "the host, not instantiated directly")
        host_handle, class_spec = self._pending_bind
        self._pending_bind = None
        guest_handle = self.handles.register(guest_obj)
        pair = PeerPair(host_handle, guest_handle, class_spec)
        self._pairs_by_host[host_handle] = pair
        self._pairs_by_guest[guest_handle] = pair
        return host_handle

    def guest_handle_of(self, host_handle: int) -> int:
        pair = self._pairs_by_host.get(host_handle)
        if pair is None:
            self.handles.lookup(host_handle)  # raises StaleHandle if retired
            raise BridgeError(f"handle {host_handle} is not a host peer")
        return pair.guest_handle

    def host_handle_of(self, guest_handle: int) -> int:
        pair = self._pairs_by_guest.get(guest_handle)
        if pair is None:
            self.handles.lookup(guest_handle)
            raise BridgeError(f"handle {guest_handle} is not a guest peer")
        return pair.host_handle

    def peer_pairs(self) -> list[PeerPair]:
        return list(self._pairs_by_host.values())

    # -- dispatch ----------------------------------------------------------------

    def dispatch(self, pair: PeerPair, which: str,
                 msg: Optional[Message] = None):
        """Invoke a guest lifecycle callback; guest errors abort the run."""
        if self.status is not RuntimeStatus.READY:
            raise BridgeError(
                f"dispatch with guest runtime {self.status.value}")
        guest_obj = self.handles.lookup(pair.guest_handle)
        shell = self.handles.lookup(pair.host_handle)
        module_path = self.kernel.module(shell._module_id).path
        msg_handle = None
        if msg is not None:
            # The guest call frame owns the message for the duration of
            # the callback; if it is still guest-owned on return, the
            # guest kept it (stored by handle).
            self.kernel.retag_guest_owned(msg, shell._module_id)
            msg_handle = self.handle_for_message(msg)
        try:
            guest_obj._dispatch(which, msg_handle)
        except Exception:
            raise GuestCallbackFailure(module_path, which,
                                       traceback.format_exc()) from None

    # -- handles for kernel objects ------------------------------------------------

    def handle_for(self, obj) -> int:
        """Mint (or reuse) the handle for an object crossing the boundary."""
        if isinstance(obj, Message):
            return self.handle_for_message(obj)
        if isinstance(obj, Gate):
            return self.handle_for_gate(obj)
        return self.handles.register(obj)

    def object_for(self, handle: int):
        return self.handles.lookup(handle)

    def handle_for_message(self, msg: Message) -> int:
        handle = self._msg_handles.get(msg.id)
        if handle is None:
            handle = self.handles.register(msg)
            self._msg_handles[msg.id] = handle
        return handle

    def handle_for_gate(self, gate: Gate) -> int:
        key = (gate.module_id, gate.name, gate.index)
        handle = self._gate_handles.get(key)
        if handle is None:
            handle = self.handles.register(gate)
            self._gate_handles[key] = handle
        return handle

    # -- exported kernel API ---------------------------------------------------------

    def _shell_of(self, module_handle: int) -> GuestModuleShell:
        obj = self.handles.lookup(module_handle)
        if not isinstance(obj, GuestModuleShell):
            raise BridgeError(f"handle {module_handle} is not a module")
        return obj

    def _msg_of(self, msg_handle: int) -> Message:
        obj = self.handles.lookup(msg_handle)
        if not isinstance(obj, Message):
            raise BridgeError(f"handle {msg_handle} is not a message")
        return obj

    def _gate_of(self, gate_handle: int) -> Gate:
        obj = self.handles.lookup(gate_handle)
        if not isinstance(obj, Gate):
            raise BridgeError(f"handle {gate_handle} is not a gate")
        return obj

    def _param(self, module_handle: int, name: str, kind: str):
        shell = self._shell_of(module_handle)
        found = self.kernel.parameter_kind(shell._module_id, name)
        if found != kind:
            raise ParameterError(
                f"parameter '{name}' is {found}, accessed as {kind}")
        return self.kernel.get_parameter(shell._module_id, name)

    def _make_export_impls(self) -> dict:
        k = self.kernel

        def now() -> int:
            return k.now().ticks

        def schedule_at(module_h, t_ticks, msg_h, priority):
            shell = self._shell_of(module_h)
            k.schedule_at(shell._module_id, SimTime(t_ticks),
                          self._msg_of(msg_h), priority)

        def send(module_h, msg_h, gate_h, priority):
            shell = self._shell_of(module_h)
            k.send(shell._module_id, self._msg_of(msg_h),
                   self._gate_of(gate_h), priority=priority)

        def cancel_event(module_h, msg_h):
            shell = self._shell_of(module_h)
            msg = k.cancel_event(shell._module_id, self._msg_of(msg_h),
                                 owner_kind=OwnerKind.GUEST)
            return self.handle_for_message(msg)

        def gate_lookup(module_h, name, index):
            shell = self._shell_of(module_h)
            gate = k.gate(shell._module_id, name,
                          None if index < 0 else index)
            return self.handle_for_gate(gate)

        def message_new(module_h, name, kind):
            shell = self._shell_of(module_h)
            msg = k.new_message(shell._module_id, name, kind,
                                owner_kind=OwnerKind.GUEST)
            return self.handle_for_message(msg)

        def message_delete(module_h, msg_h):
            shell = self._shell_of(module_h)
            msg = self._msg_of(msg_h)
            k.delete_message(shell._module_id, msg,
                             owner_kind=OwnerKind.GUEST)
            self.handles.retire(msg_h)
            del self._msg_handles[msg.id]

        def set_control_info_register(msg_h, protocol_id):
            from .stdmodels import RegisterProtocol
            self._msg_of(msg_h).control_info = RegisterProtocol(protocol_id)

        def set_control_info_frame(msg_h, src, dst, ethertype):
            from .stdmodels import FrameMeta
            self._msg_of(msg_h).control_info = FrameMeta(src, dst, ethertype)

        def control_info_kind(msg_h) -> str:
            from .stdmodels import FrameMeta, RegisterProtocol
            info = self._msg_of(msg_h).control_info
            if isinstance(info, RegisterProtocol):
                return "register"
            if isinstance(info, FrameMeta):
                return "frame"
            return "none"

        def control_info_field(msg_h, field_name) -> int:
            info = self._msg_of(msg_h).control_info
            try:
                return int(getattr(info, field_name))
            except AttributeError:
                raise BridgeError(
                    f"control info {type(info).__name__} has no field "
                    f"'{field_name}'") from None

        def message_set_payload(msg_h, text):
            self._msg_of(msg_h).payload_bytes = text.encode("latin-1")

        def message_payload(msg_h) -> str:
            payload = self._msg_of(msg_h).payload_bytes
            return (payload or b"").decode("latin-1")

        def record_scalar(module_h, name, value):
            shell = self._shell_of(module_h)
            k.record_scalar(shell._module_id, name, float(value))

        def record_scalar_int(module_h, name, value):
            shell = self._shell_of(module_h)
            k.record_scalar(shell._module_id, name, int(value))

        def log_text(module_h, text):
            shell = self._shell_of(module_h)
            k.module_log(shell._module_id, text)

        def rng_next_int(module_h, bound):
            self._shell_of(module_h)
            return k.rng_int(bound)

        return {
            "now": now,
            "schedule_at": schedule_at,
            "send": send,
            "cancel_event": cancel_event,
            "gate_lookup": gate_lookup,
            "get_parameter_kind": lambda mh, name: self._kind_of(mh, name),
            "get_parameter_int": lambda mh, name: int(
                self._param(mh, name, "int")),
            "get_parameter_double": lambda mh, name: float(
                self._param(mh, name, "double")),
            "get_parameter_bool": lambda mh, name: bool(
                self._param(mh, name, "bool")),
            "get_parameter_string": lambda mh, name: str(
                self._param(mh, name, "string")),
            "get_parameter_time": lambda mh, name: self._param(
                mh, name, "time").ticks,
            "message_new": message_new,
            "message_delete": message_delete,
            "message_name": lambda mh: self._msg_of(mh).name,
            "message_set_name": lambda mh, name: setattr(
                self._msg_of(mh), "name", name),
            "message_kind": lambda mh: self._msg_of(mh).kind,
            "message_set_kind": lambda mh, kind: setattr(
                self._msg_of(mh), "kind", kind),
            "message_byte_length": lambda mh: self._msg_of(mh).byte_length,
            "message_set_byte_length": lambda mh, n: setattr(
                self._msg_of(mh), "byte_length", n),
            "message_payload": message_payload,
            "message_set_payload": message_set_payload,
            "message_creation_time": lambda mh:
                self._msg_of(mh).creation_time.ticks,
            "message_send_time": lambda mh: self._msg_of(mh).send_time.ticks,
            "message_arrival_time": lambda mh:
                self._msg_of(mh).arrival_time.ticks,
            "set_control_info_register": set_control_info_register,
            "set_control_info_frame": set_control_info_frame,
            "control_info_kind": control_info_kind,
            "control_info_field": control_info_field,
            "record_scalar": record_scalar,
            "record_scalar_int": record_scalar_int,
            "log": log_text,
            "rng_next_int": rng_next_int,
        }

    def _kind_of(self, module_handle: int, name: str) -> str:
        shell = self._shell_of(module_handle)
        return self.kernel.parameter_kind(shell._module_id, name)
