"""
Gates, controlled gates and circuits acting on dense register states.

Gates carry explicit matrices; a k-qubit gate's matrix is written in the
order of its ``targets`` (first target = most significant bit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError
from .qstate import DensityMatrix, RegisterLayout, StateVector

__all__ = [
    "I2",
    "X",
    "Y",
    "Z",
    "H",
    "ZX",
    "Gate",
    "ControlledGate",
    "Circuit",
    "apply_gate",
    "apply_operator",
    "controlled_unitary",
    "circuit_unitary",
    "embed",
    "state_prep_unitary",
]

UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
# X acts first, then Z
ZX = Z @ X

for _m in (I2, X, Y, Z, H, ZX):
    _m.flags.writeable = False


def _is_unitary(u: NDArray, tol: float = UNITARY_TOL) -> bool:
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0)


@dataclass(frozen=True)
class Gate:
    """Unitary ``matrix`` applied to the ordered qubits ``targets``."""

    matrix: NDArray
    targets: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        targets = tuple(int(t) for t in self.targets)
        if len(set(targets)) != len(targets):
            raise InvalidArgumentError(f"gate targets {targets} are not distinct")
        if any(t < 0 for t in targets):
            raise InvalidArgumentError(f"negative target in {targets}")
        k = len(targets)
        if m.shape != (2**k, 2**k):
            raise InvalidArgumentError(
                f"matrix shape {m.shape} does not match {k} target qubit(s)"
            )
        if not _is_unitary(m):
            raise InvalidArgumentError(f"gate {self.name or '<unnamed>'} is not unitary")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", targets)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets

    def as_gate(self) -> "Gate":
        return self

    def inverse(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.targets, f"{self.name}^dag" if self.name else "")

    def relabel(self, mapping: Sequence[int]) -> "Gate":
        return Gate(self.matrix, tuple(mapping[t] for t in self.targets), self.name)


@dataclass(frozen=True)
class ControlledGate:
    """``base`` fires only when every ``(qubit, polarity)`` control matches."""

    base: Gate
    controls: tuple[tuple[int, int], ...]

    def __post_init__(self):
        controls = tuple((int(q), int(b)) for q, b in self.controls)
        qubits = [q for q, _ in controls]
        if len(set(qubits)) != len(qubits):
            raise InvalidArgumentError(f"repeated control qubit in {controls}")
        if any(b not in (0, 1) for _, b in controls):
            raise InvalidArgumentError("control polarity must be 0 or 1")
        if set(qubits) & set(self.base.targets):
            raise InvalidArgumentError("control and target qubits overlap")
        object.__setattr__(self, "controls", controls)

    @property
    def name(self) -> str:
        pattern = "".join(str(b) for _, b in self.controls)
        return f"C[{pattern}]{self.base.name}"

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + self.base.targets

    def as_gate(self) -> Gate:
        """Equivalent plain gate on ``controls + targets``."""
        m = len(self.controls)
        dc, dt = 2**m, self.base.matrix.shape[0]
        match = int("".join(str(b) for _, b in self.controls), 2) if m else 0
        proj = np.zeros((dc, dc), dtype=np.complex128)
        proj[match, match] = 1.0
        full = np.eye(dc * dt, dtype=np.complex128) + np.kron(proj, self.base.matrix - np.eye(dt))
        return Gate(full, self.qubits, self.name)

    def inverse(self) -> "ControlledGate":
        return ControlledGate(self.base.inverse(), self.controls)

    def relabel(self, mapping: Sequence[int]) -> "ControlledGate":
        return ControlledGate(
            self.base.relabel(mapping), tuple((mapping[q], b) for q, b in self.controls)
        )


AnyGate = Union[Gate, ControlledGate]


def _apply_local(tensor: NDArray, op: NDArray, axes: Sequence[int]) -> NDArray:
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_operator(state, op: ArrayLike, targets: Sequence[int]):
    """Apply an arbitrary (not necessarily unitary) operator on ``targets``.

    State vectors map to ``op @ psi``; density matrices to ``op rho op^dag``.
    Results are returned unvalidated.
    """
    op = np.asarray(op, dtype=np.complex128)
    targets = [int(t) for t in targets]
    n = state.n_qubits
    for t in targets:
        if not 0 <= t < n:
            raise InvalidArgumentError(f"target {t} out of range for {n} qubits")
    if isinstance(state, StateVector):
        tensor = state.amplitudes.reshape((2,) * n)
        out = _apply_local(tensor, op, targets)
        return StateVector(out.reshape(-1), validate=False)
    if isinstance(state, DensityMatrix):
        tensor = state.elements.reshape((2,) * (2 * n))
        tensor = _apply_local(tensor, op, targets)
        tensor = _apply_local(tensor, op.conj(), [t + n for t in targets])
        return DensityMatrix(tensor.reshape(2**n, 2**n), validate=False)
    raise InvalidArgumentError(f"expected a quantum state, got {type(state).__name__}")


def apply_gate(state, gate: AnyGate):
    """Evolve ``state`` by ``gate`` embedded on its qubits."""
    g = gate.as_gate()
    return apply_operator(state, g.matrix, g.targets)


def controlled_unitary(
    base: Gate, controls: Iterable[tuple[int, int]], n_qubits: int | None = None
) -> tuple[ControlledGate, NDArray]:
    """Build a controlled gate and its unitary on the full register.

    ``n_qubits`` defaults to the smallest register containing every qubit.
    """
    cg = ControlledGate(base, tuple(controls))
    if n_qubits is None:
        n_qubits = max(cg.qubits) + 1
    return cg, embed(cg, n_qubits)


def embed(gate: AnyGate, n_qubits: int) -> NDArray:
    """Full ``2**n x 2**n`` matrix of ``gate`` on an ``n``-qubit register."""
    g = gate.as_gate()
    if max(g.targets, default=-1) >= n_qubits:
        raise InvalidArgumentError(f"gate touches qubit {max(g.targets)} of a {n_qubits}-qubit register")
    d = 2**n_qubits
    tensor = np.eye(d, dtype=np.complex128).reshape((2,) * (2 * n_qubits))
    tensor = _apply_local(tensor, g.matrix, list(g.targets))
    return tensor.reshape(d, d)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on an ``n_qubits`` register."""

    n_qubits: int
    gates: tuple[AnyGate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            bad = [q for q in g.qubits if q >= self.n_qubits]
            if bad:
                raise InvalidArgumentError(
                    f"gate {g.name or type(g).__name__} references qubit {bad[0]} "
                    f"outside a {self.n_qubits}-qubit circuit"
                )
        object.__setattr__(self, "gates", gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise InvalidArgumentError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def append(self, *gates: AnyGate) -> "Circuit":
        return Circuit(self.n_qubits, self.gates + gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def relabel(self, layout: RegisterLayout) -> "Circuit":
        """Same circuit with logical qubit ``q`` moved to ``layout.physical(q)``."""
        if layout.n_qubits != self.n_qubits:
            raise InvalidArgumentError("layout width does not match circuit width")
        return Circuit(self.n_qubits, tuple(g.relabel(layout.permutation) for g in self.gates))

    def run(self, state):
        for g in self.gates:
            state = apply_gate(state, g)
        return state


def circuit_unitary(circuit: Circuit) -> NDArray:
    """Product of the embedded gate unitaries, last gate leftmost."""
    d = 2**circuit.n_qubits
    u = np.eye(d, dtype=np.complex128)
    for g in circuit.gates:
        u = embed(g, circuit.n_qubits) @ u
    return u


def state_prep_unitary(a: complex, b: complex) -> NDArray:
    """A unitary sending ``|0>`` to ``a|0> + b|1>``."""
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=np.complex128)
