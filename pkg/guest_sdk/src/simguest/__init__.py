"""simguest: write gatesim simulation models in plain Python classes.

A model subclasses GuestSimpleModule and overrides initialize,
handle_message, and finish. Instances are created by the simulation host,
never directly; the host addresses a model in topology files as
``guest:<module>.<Class>`` (for the bundled examples,
``guest:simguest.models.TicTocGuest`` and friends).

All times are integer picosecond ticks; see ``simguest.timeunits``.
"""

from ._stubs import BindingNotInstalled
from .message import FrameInfo, GuestMessage, RegisterInfo
from .module import GuestSimpleModule

__version__ = "0.1.0"

__all__ = [
    "BindingNotInstalled",
    "FrameInfo",
    "GuestMessage",
    "GuestSimpleModule",
    "RegisterInfo",
    "__version__",
]
