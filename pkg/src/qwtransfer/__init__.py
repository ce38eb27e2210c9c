"""Simulation toolkit for quantum-walk based single-qubit state transfer on a
four-qubit register, with NMR-style noise, state and process tomography."""

from . import circuit, nmr, noise, qstate, tomography, transfer, walk
from .errors import (
    ConfigError,
    ContractViolationError,
    InvalidArgumentError,
    KindMismatchError,
    QWTransferError,
    UndefinedBranchError,
    UnderdeterminedError,
    UnsupportedEncodingError,
    ZeroProbabilityBranchError,
)
from .qstate import DensityMatrix, RegisterLayout, StateVector, partial_trace, project_and_renormalize
from .transfer import (
    NMR_LAYOUT,
    THEORY_LAYOUT,
    ProtocolConfig,
    ideal_final_state,
    ideal_state_after_walk,
    reconstruct_bob,
    run_protocol_coherent,
)
from .tomography import reconstruct_state, state_fidelity, witness_value

__version__ = "0.1.0"
