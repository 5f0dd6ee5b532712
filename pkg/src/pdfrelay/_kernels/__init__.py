"""Hot numeric kernels with two interchangeable backends.

``numba`` (default when importable) compiles the loops with ``@njit``;
``numpy`` is a vectorized pure-numpy path. Set ``PDFRELAY_NUMBA=0`` to force
the numpy path. Both expose the same functions:

- ``eig_log_grad_coords``: derivative of the active generalized
  eigenvalues along every real coordinate of ``C``;
- ``barrier_solve``: log-barrier path following for the master problem.
"""
from __future__ import annotations

import os

from . import _numpy

__all__ = ["backend", "get_backend", "available_backends", "BACKEND_ENV"]

BACKEND_ENV = "PDFRELAY_NUMBA"

_loaded = {"numpy": _numpy}


def _numba_requested():
    return os.environ.get(BACKEND_ENV, "1").strip().lower() not in ("0", "false", "no", "off")


def get_backend(name):
    """Return the kernel module ``name`` (``"numba"`` or ``"numpy"``)."""
    if name not in _loaded:
        if name != "numba":
            raise ValueError(f"unknown kernel backend {name!r}")
        from . import _numba

        _loaded["numba"] = _numba
    return _loaded[name]


def available_backends():
    names = ["numpy"]
    try:
        get_backend("numba")
    except ImportError:
        pass
    else:
        names.insert(0, "numba")
    return names


_active = None


def backend():
    """Kernel module selected by ``PDFRELAY_NUMBA`` (resolved once per process)."""
    global _active
    if _active is None:
        if _numba_requested():
            try:
                _active = get_backend("numba")
            except ImportError:
                _active = _numpy
        else:
            _active = _numpy
    return _active
