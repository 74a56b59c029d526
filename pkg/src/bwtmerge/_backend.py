"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or when
``BWTMERGE_PURE_PYTHON=1`` is set, the pure-Python ``_pykernels`` module is.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("BWTMERGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    active = _compiled
else:
    active = _pykernels


def available() -> list[str]:
    return sorted(_BACKENDS)


def get(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None


@contextmanager
def use(name: str):
    """Temporarily switch the active backend (tests and benchmarks)."""
    global active
    previous = active
    active = get(name)
    try:
        yield active
    finally:
        active = previous
