"""TEBD kernel backend selection.

The compiled Cython kernel is used when importable; set OPSPREAD_KERNEL to
"python" or "compiled" to force a backend (the latter raises if the extension
is missing). Both implement the identical contract of
:func:`opspread._kernels_py.two_site_apply`.
"""

import os

from . import _kernels_py
from .errors import InvalidInputError

try:
    from . import _kernels_cy

    HAVE_COMPILED = hasattr(_kernels_cy, "two_site_apply")
except ImportError:  # pure-python install
    _kernels_cy = None
    HAVE_COMPILED = False

_BACKENDS = {"python": _kernels_py}
if HAVE_COMPILED:
    _BACKENDS["compiled"] = _kernels_cy


def _initial_backend():
    name = os.environ.get("OPSPREAD_KERNEL", "auto")
    if name == "auto":
        return "compiled" if HAVE_COMPILED else "python"
    if name not in _BACKENDS:
        raise InvalidInputError(
            f"OPSPREAD_KERNEL={name!r} unavailable (have: {sorted(_BACKENDS)})"
        )
    return name


_active = _initial_backend()


def active_backend():
    return _active


def set_backend(name):
    """Select the kernel backend; returns the previous one."""
    global _active
    if name not in _BACKENDS:
        raise InvalidInputError(f"unknown backend {name!r} (have: {sorted(_BACKENDS)})")
    prev = _active
    _active = name
    return prev


def two_site_apply(a, b, gate, chi_max, lambda2_cutoff, center_right, hard_cap):
    return _BACKENDS[_active].two_site_apply(
        a, b, gate, chi_max, lambda2_cutoff, center_right, hard_cap
    )
