"""Secure multi-party summation by entanglement swapping of qudit cat and Bell states.

Submodules:

    register     dense qudit registers, F / X / Z gates, B1 / B2 / Bell / cat measurements
    states       Bell and cat state labels, construction, (c1)/(c2) checkers
    swap         dense and label-level swapping engines plus their cross-validation
    protocol     the summation protocol with eavesdropping checks and JSONL transcripts
    adversary    intercept-resend and entangle-ancilla attacks, TP information ledger
    cli          ``qsms`` command-line entry point

Set ``QSMS_DISABLE_NUMBA=1`` to run the hot kernels in plain numpy.
"""

from ._kernels import BACKEND
from .errors import (
    ConfigError,
    DimensionMismatch,
    EngineIdentityError,
    IncompleteTranscript,
    MemoryGuardError,
    NotUnitaryError,
    QSMSError,
    UnknownQudit,
)
from .protocol import ProtocolConfig, ProtocolTranscript, replay, run_protocol
from .register import Basis, QuditRegister, make_register
from .states import BellLabel, CatLabel, make_bell, make_cat
from .swap import SwapInstance, cross_validate, swap_dense, swap_labels

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Basis",
    "BellLabel",
    "CatLabel",
    "ConfigError",
    "DimensionMismatch",
    "EngineIdentityError",
    "IncompleteTranscript",
    "MemoryGuardError",
    "NotUnitaryError",
    "ProtocolConfig",
    "ProtocolTranscript",
    "QSMSError",
    "QuditRegister",
    "SwapInstance",
    "UnknownQudit",
    "cross_validate",
    "make_bell",
    "make_cat",
    "make_register",
    "replay",
    "run_protocol",
    "swap_dense",
    "swap_labels",
]
