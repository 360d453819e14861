"""Host-facing binding surface.

The simulation host imports this module when it starts the guest runtime:
it reads the vendored registration table, verifies it against its own
export registry, and only then installs the export dispatch table. Guest
model code never needs anything from here.
"""

import importlib
from importlib import resources

from . import _stubs


def registration_table_text() -> str:
    """The generated table vendored with this SDK build."""
    return resources.files(__package__).joinpath("_registration.tsv") \
        .read_text(encoding="utf-8")


def install(exports, bind_hook) -> None:
    _stubs.install(exports, bind_hook)


def teardown() -> None:
    _stubs.teardown()


def resolve_class(spec: str):
    """Resolve a ``module.Class`` spec to the guest model class."""
    module_name, _, class_name = spec.rpartition(".")
    if not module_name:
        raise ImportError(f"guest class spec '{spec}' has no module part")
    module = importlib.import_module(module_name)
    return getattr(module, class_name)
