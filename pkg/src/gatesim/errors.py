"""Exception taxonomy for the simulator.

Grouped by subsystem so the CLI can map failures onto its exit codes:
parse/config problems, elaboration problems, guest-runtime problems, and
callback failures during a run.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for every error raised by this package."""


# --- simulated time ---------------------------------------------------------

class SimTimeOverflow(SimulationError):
    """Tick arithmetic left the signed 64-bit range."""


class TimeParseError(SimulationError):
    """A time literal could not be parsed exactly."""


class UnknownUnit(TimeParseError):
    """A time (or rate) literal is missing its unit or uses an unknown one."""


# --- kernel -----------------------------------------------------------------

class SchedulingInPast(SimulationError):
    """schedule_at() was called with a time before the current clock."""


class NotOwner(SimulationError):
    """The caller does not own the message it tried to hand off."""


class NotScheduled(SimulationError):
    """cancel_event() on a message that is not a pending self-message."""


class UnconnectedGate(SimulationError):
    """A send or elaboration check hit a gate with no connection."""


class WrongDirection(SimulationError):
    """A gate was used against its declared direction."""


class UnknownGate(SimulationError):
    """A gate name/index that the module does not have."""


class ParameterError(SimulationError):
    """A module parameter was read with the wrong type or does not exist."""


class ProtocolViolation(SimulationError):
    """A stdmodels behavioral contract was broken (aborts the run)."""


class CallbackFailure(SimulationError):
    """A module callback raised; carries the module path and the cause.

    When raised out of Kernel.run() the partial RunReport is attached as
    ``report``.
    """

    def __init__(self, module_path: str, phase: str, cause: BaseException):
        super().__init__(f"{phase} failed in module '{module_path}': {cause}")
        self.module_path = module_path
        self.phase = phase
        self.cause = cause
        self.report = None


# --- parsing (topology DSL, ini config, manifests) ---------------------------

class ParseError(SimulationError):
    """Syntax problem with a source position and the expected tokens."""

    def __init__(self, message: str, line: int = 0, column: int = 0,
                 expected: tuple[str, ...] = ()):
        loc = f" at {line}:{column}" if line else ""
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message}{loc}{hint}")
        self.line = line
        self.column = column
        self.expected = expected


class DuplicateName(ParseError):
    """Two declarations share a name within one scope."""


class ConfigError(SimulationError):
    """Semantic problem in an ini file (unknown key, bad value, ...)."""


class DuplicateSection(ConfigError):
    """The same [Section] appears twice in one config file."""


# --- elaboration -------------------------------------------------------------

class ElaborationError(SimulationError):
    """Base class for errors while building the module tree."""


class UnknownModuleType(ElaborationError):
    """A submodule type resolves to no declaration, class, or guest entry."""


class UnassignedParameter(ElaborationError):
    """A declared parameter has neither an assignment nor a default."""


class GateDirectionMismatch(ElaborationError):
    """A connection endpoint uses a gate against its direction."""


# --- binding generator -------------------------------------------------------

class ManifestError(ParseError):
    """Syntax problem in a binding manifest."""


class DuplicateEntry(ManifestError):
    """The same manifest entry appears twice."""


class UnmappableOperator(SimulationError):
    """An operator symbol outside the renaming table."""


class CollisionUnresolvable(SimulationError):
    """Namespace-prefix repair still leaves two entries with one guest name."""


# --- guest bridge ------------------------------------------------------------

class BridgeError(SimulationError):
    """Base class for host/guest boundary errors."""


class RuntimeStartFailure(BridgeError):
    """The guest runtime or its SDK could not be started/loaded."""


class RegistrationMismatch(BridgeError):
    """The guest registration table disagrees with the kernel exports.

    Carries every discrepancy, not just the first one.
    """

    def __init__(self, mismatches):
        lines = "; ".join(str(m) for m in mismatches)
        super().__init__(f"{len(mismatches)} registration mismatch(es): {lines}")
        self.mismatches = list(mismatches)


class UnknownGuestClass(BridgeError):
    """A guest:module.Class type name did not resolve in the search path."""


class GuestConstructorFailure(BridgeError):
    """A guest module constructor raised; carries the guest traceback text."""


class GuestCallbackFailure(BridgeError):
    """A guest callback raised; carries module path and guest traceback."""

    def __init__(self, module_path: str, which: str, guest_traceback: str):
        super().__init__(
            f"guest {which} failed in module '{module_path}':\n{guest_traceback}")
        self.module_path = module_path
        self.which = which
        self.guest_traceback = guest_traceback


class StaleHandle(BridgeError):
    """A handle was used after its object was torn down or deleted."""
