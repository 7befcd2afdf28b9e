"""Hot bit-manipulation kernels with a selectable backend.

The numba backend is used when numba imports cleanly and the environment
variable ``SPINWIRE_NUMBA`` is not set to ``0``/``false``/``off``.  Both
backends are importable directly (``_numpy`` always, ``_numba`` when
available) so they can be checked against each other.
"""

import os

from . import _numpy as numpy_impl

_FALSY = {"0", "false", "no", "off"}


def _load_numba():
    if os.environ.get("SPINWIRE_NUMBA", "1").strip().lower() in _FALSY:
        return None
    try:
        from . import _numba
    except ImportError:
        return None
    return _numba


numba_impl = _load_numba()
_impl = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if numba_impl is not None else "numpy"

popcount = _impl.popcount
sector_block = _impl.sector_block
pauli_string_matrix = _impl.pauli_string_matrix
pauli_string_apply = _impl.pauli_string_apply
xstate_accumulate = _impl.xstate_accumulate

__all__ = [
    "BACKEND",
    "numba_impl",
    "numpy_impl",
    "pauli_string_apply",
    "pauli_string_matrix",
    "popcount",
    "sector_block",
    "xstate_accumulate",
]
