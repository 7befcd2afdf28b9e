"""Exact-diagonalization simulator for entanglement transfer through XXZ
spin chains with a z-axis Dzyaloshinskii-Moriya interaction."""

from .dynamics import Channel, DegeneracyWarning, DegenerateGroundStateError
from .hamiltonian import ChainConfig
from .protocol import TimeGrid, TransferRecord, run_transfer

__version__ = "0.1.0"

__all__ = [
    "ChainConfig",
    "Channel",
    "DegeneracyWarning",
    "DegenerateGroundStateError",
    "TimeGrid",
    "TransferRecord",
    "__version__",
    "run_transfer",
]
