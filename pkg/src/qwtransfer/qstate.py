"""
Dense qubit-register states and the linear algebra acting on them.

Basis convention: qubit 0 is the most significant bit of a basis index, so
the ket ``|q0 q1 ... q_{n-1}>`` has index ``sum(q_k * 2**(n-1-k))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError, KindMismatchError, ZeroProbabilityBranchError

__all__ = [
    "StateVector",
    "DensityMatrix",
    "RegisterLayout",
    "kron_compose",
    "partial_trace",
    "project_and_renormalize",
    "make_pps",
    "permute_qubits",
    "permute_operator",
    "as_density",
    "haar_random_state",
    "random_density_matrix",
]

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-8


def _qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise InvalidArgumentError(f"dimension {dim} is not a power of two")
    return n


def _frozen(arr: NDArray) -> NDArray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


class StateVector:
    """Normalized pure state of an ``n``-qubit register."""

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes: ArrayLike, *, validate: bool = True):
        amps = _frozen(np.ravel(amplitudes))
        n = _qubit_count(amps.size)
        if validate:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise InvalidArgumentError(f"state is not normalized (norm^2 = {norm!r})")
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def from_bits(cls, bits: str | Sequence[int]) -> "StateVector":
        """Computational basis state, e.g. ``StateVector.from_bits("0110")``."""
        bits = [int(b) for b in bits]
        index = int("".join(map(str, bits)), 2) if bits else 0
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_unnormalized(cls, amplitudes: ArrayLike) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite register state."""

    __slots__ = ("elements", "n_qubits")

    def __init__(self, elements: ArrayLike, *, validate: bool = True):
        rho = _frozen(elements)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidArgumentError(f"density matrix must be square, got shape {rho.shape}")
        n = _qubit_count(rho.shape[0])
        if validate:
            _check_density(rho)
        self.elements = rho
        self.n_qubits = n

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))

    def __repr__(self) -> str:
        return f"DensityMatrix(n_qubits={self.n_qubits})"


def _check_density(rho: NDArray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise InvalidArgumentError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidArgumentError(f"density matrix trace is {tr!r}, expected 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < PSD_TOL:
        raise InvalidArgumentError(f"density matrix has negative eigenvalue {lowest!r}")


State = Union[StateVector, DensityMatrix]


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, StateVector):
        return state.to_density()
    if isinstance(state, DensityMatrix):
        return state
    raise InvalidArgumentError(f"expected a quantum state, got {type(state).__name__}")


@dataclass(frozen=True)
class RegisterLayout:
    """Named physical ordering of a logical qubit register.

    ``permutation[q]`` is the physical position of logical qubit ``q`` and
    ``labels[p]`` names physical position ``p``.
    """

    labels: tuple[str, ...]
    permutation: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "permutation", tuple(int(p) for p in self.permutation))
        n = len(self.permutation)
        if sorted(self.permutation) != list(range(n)):
            raise InvalidArgumentError(f"{self.permutation} is not a permutation of 0..{n - 1}")
        if len(self.labels) != n:
            raise InvalidArgumentError("one label per qubit is required")

    @classmethod
    def identity(cls, labels: Sequence[str]) -> "RegisterLayout":
        return cls(tuple(labels), tuple(range(len(labels))))

    @property
    def n_qubits(self) -> int:
        return len(self.permutation)

    def physical(self, logical: int) -> int:
        return self.permutation[logical]

    def logical(self, physical: int) -> int:
        return self.permutation.index(physical)

    def inverse(self) -> "RegisterLayout":
        inv = [0] * self.n_qubits
        for q, p in enumerate(self.permutation):
            inv[p] = q
        return RegisterLayout(tuple(self.labels[p] for p in self.permutation), tuple(inv))


def kron_compose(parts: Sequence[State]) -> State:
    """Tensor product of states, first part on the most significant qubits."""
    if not parts:
        raise InvalidArgumentError("nothing to compose")
    kinds = {type(p) for p in parts}
    if len(kinds) != 1 or not kinds <= {StateVector, DensityMatrix}:
        raise KindMismatchError("all parts must be StateVector or all DensityMatrix")
    if isinstance(parts[0], StateVector):
        out = np.ones(1, dtype=np.complex128)
        for part in parts:
            out = np.kron(out, part.amplitudes)
        return StateVector(out)
    out = np.ones((1, 1), dtype=np.complex128)
    for part in parts:
        out = np.kron(out, part.elements)
    return DensityMatrix(out)


def _check_indices(indices: Sequence[int], n: int) -> list[int]:
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise InvalidArgumentError(f"repeated qubit index in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise InvalidArgumentError(f"qubit index {i} out of range for {n} qubits")
    return idx


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep`` (returned in ascending qubit order)."""
    rho = as_density(rho)
    n = rho.n_qubits
    keep = sorted(_check_indices(keep, n))
    if not keep:
        raise InvalidArgumentError("keep set must be non-empty")
    tensor = rho.elements.reshape((2,) * (2 * n))
    row = list(range(n))
    col = [q + n if q in keep else q for q in range(n)]
    out = keep + [q + n for q in keep]
    reduced = np.einsum(tensor, row + col, out)
    d = 2 ** len(keep)
    return DensityMatrix(reduced.reshape(d, d))


def project_and_renormalize(
    rho: State, projector_qubits: Sequence[int], bitstring: str | Sequence[int]
) -> tuple[DensityMatrix, float]:
    """Condition ``rho`` on ``projector_qubits`` reading ``bitstring``.

    Returns the normalized state of the remaining qubits (ascending order)
    and the branch probability ``Tr[P rho]``.
    """
    rho = as_density(rho)
    n = rho.n_qubits
    qubits = _check_indices(projector_qubits, n)
    bits = [int(b) for b in bitstring]
    if len(bits) != len(qubits):
        raise InvalidArgumentError("bitstring length must match projector_qubits")
    if any(b not in (0, 1) for b in bits):
        raise InvalidArgumentError(f"bitstring {bitstring!r} is not binary")
    if len(qubits) == n:
        raise InvalidArgumentError("at least one qubit must remain unprojected")
    tensor = rho.elements.reshape((2,) * (2 * n))
    index: list[object] = [slice(None)] * (2 * n)
    for q, b in zip(qubits, bits):
        index[q] = b
        index[q + n] = b
    block = tensor[tuple(index)]
    d = 2 ** (n - len(qubits))
    block = block.reshape(d, d)
    prob = float(np.real(np.trace(block)))
    if prob < 1e-12:
        raise ZeroProbabilityBranchError(
            f"branch {''.join(map(str, bits))} on qubits {qubits} has probability {prob:.3e}"
        )
    sigma = block / prob
    return DensityMatrix(0.5 * (sigma + sigma.conj().T)), prob


def make_pps(pure: StateVector, alpha: float) -> DensityMatrix:
    """Pseudopure mixture ``(1-alpha) I / 2**n + alpha |pure><pure|``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    d = pure.dim
    rho = (1.0 - alpha) / d * np.eye(d) + alpha * np.outer(pure.amplitudes, pure.amplitudes.conj())
    return DensityMatrix(rho)


def _axis_order(layout: RegisterLayout, n: int) -> list[int]:
    if layout.n_qubits != n:
        raise InvalidArgumentError(
            f"layout covers {layout.n_qubits} qubits but the state has {n}"
        )
    # new axis p carries old logical qubit inverse[p]
    return list(layout.inverse().permutation)


def permute_qubits(state: State, layout: RegisterLayout) -> State:
    """Move logical qubit ``q`` to physical position ``layout.permutation[q]``."""
    if isinstance(state, StateVector):
        axes = _axis_order(layout, state.n_qubits)
        amps = state.amplitudes.reshape((2,) * state.n_qubits).transpose(axes)
        return StateVector(amps.reshape(-1), validate=False)
    if isinstance(state, DensityMatrix):
        return DensityMatrix(permute_operator(state.elements, layout), validate=False)
    raise InvalidArgumentError(f"expected a quantum state, got {type(state).__name__}")


def permute_operator(op: ArrayLike, layout: RegisterLayout) -> NDArray:
    """Reindex an ``n``-qubit operator under the qubit permutation of ``layout``."""
    op = np.asarray(op, dtype=np.complex128)
    n = _qubit_count(op.shape[0])
    axes = _axis_order(layout, n)
    tensor = op.reshape((2,) * (2 * n))
    tensor = tensor.transpose(axes + [a + n for a in axes])
    return tensor.reshape(op.shape)


def haar_random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    d = 2**n_qubits
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector.from_unnormalized(z)


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble mixed state of the given rank (full rank by default)."""
    d = 2**n_qubits
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(0.5 * (rho + rho.conj().T))
