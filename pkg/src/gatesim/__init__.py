"""gatesim: a discrete-event network simulator.

Simulation models are leaf modules with initialize/handle_message/finish
callbacks, wired through gates and connections described in a small
topology DSL. Models can be native Python classes or guest-language
classes loaded through the bridge; both kinds coexist in one network and
produce identical event traces.
"""

from .errors import SimulationError
from .kernel import (
    Direction,
    EventRecord,
    Kernel,
    Message,
    OwnerKind,
    RunReport,
    SimpleModule,
    StopReason,
)
from .simtime import RESOLUTION, SimTime, ZERO

__version__ = "0.1.0"

__all__ = [
    "Direction",
    "EventRecord",
    "Kernel",
    "Message",
    "OwnerKind",
    "RESOLUTION",
    "RunReport",
    "SimTime",
    "SimpleModule",
    "SimulationError",
    "StopReason",
    "ZERO",
    "__version__",
]
