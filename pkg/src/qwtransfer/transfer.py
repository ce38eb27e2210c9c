"""
Single-qubit state transfer by a two-coin, two-step walk on a 4-cycle.

Logical register order is ``(A_c, P1, P0, B_c)``: Alice's coin, the two
arena (position) qubits, Bob's coin. ``NMR_LAYOUT`` maps this onto the
molecule register ``(C1, C2, C3, C4) = (B_c, P1, A_c, P0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .circuit import H, I2, X, Z, ZX, Circuit, ControlledGate, Gate, circuit_unitary, state_prep_unitary
from .errors import InvalidArgumentError, UndefinedBranchError, ZeroProbabilityBranchError
from .qstate import (
    DensityMatrix,
    RegisterLayout,
    StateVector,
    as_density,
    kron_compose,
    make_pps,
    partial_trace,
    permute_qubits,
    project_and_renormalize,
)
from .walk import CoinSpec, CycleWalk, step_gates

if TYPE_CHECKING:
    from .noise import NoiseModel

__all__ = [
    "A_C",
    "P1",
    "P0",
    "B_C",
    "THEORY_LAYOUT",
    "NMR_LAYOUT",
    "LAYOUTS",
    "NAMED_INPUTS",
    "TransferBranch",
    "TRANSFER_TABLE",
    "ProtocolConfig",
    "resolve_input",
    "arena_walk",
    "initial_state",
    "protocol_circuit",
    "correction_circuit",
    "correction_for_branch",
    "correction_unitary",
    "ideal_state_after_walk",
    "ideal_final_state",
    "run_protocol_coherent",
    "bob_state",
    "reconstruct_bob",
    "reconstruct_branches",
    "BranchResult",
    "branch_correction",
    "populated_branches",
    "sample_branches",
]

A_C, P1, P0, B_C = 0, 1, 2, 3

THEORY_LAYOUT = RegisterLayout(("A_c", "P1", "P0", "B_c"), (0, 1, 2, 3))
NMR_LAYOUT = RegisterLayout(("C1", "C2", "C3", "C4"), (2, 1, 3, 0))
LAYOUTS = {"theory": THEORY_LAYOUT, "nmr": NMR_LAYOUT}

# (P1, P0, A_c, B_c) ordering of |00> x |phi> x |0>
_INPUT_ORDER = RegisterLayout(("P1", "P0", "A_c", "B_c"), (1, 2, 0, 3))

_S = 1 / math.sqrt(2)
NAMED_INPUTS: dict[str, tuple[complex, complex]] = {
    "zero": (1.0, 0.0),
    "one": (0.0, 1.0),
    "plus": (_S, _S),
    "plus_i": (_S, 1j * _S),
}
# "minus" is the customary experimental name for (|0> + i|1>)/sqrt(2)
INPUT_ALIASES = {"minus": "plus_i"}
DISPLAY_NAMES = {"zero": "|0>", "one": "|1>", "plus": "|+>", "plus_i": "|->"}


@dataclass(frozen=True)
class TransferBranch:
    alice_coin_bit: int
    arena_bits: str
    correction: str

    @property
    def matrix(self) -> NDArray:
        return _CORRECTIONS[self.correction]


_CORRECTIONS = {"I": I2, "Z": Z, "X": X, "ZX": ZX}

TRANSFER_TABLE: tuple[TransferBranch, ...] = (
    TransferBranch(0, "11", "I"),
    TransferBranch(1, "11", "Z"),
    TransferBranch(0, "00", "X"),
    TransferBranch(1, "00", "ZX"),
)
_TABLE_LOOKUP = {(t.alice_coin_bit, t.arena_bits): t for t in TRANSFER_TABLE}


def resolve_input(value: str | tuple[complex, complex]) -> tuple[complex, complex]:
    """Named input (``zero``, ``one``, ``plus``, ``plus_i``) or explicit ``(a, b)``."""
    if isinstance(value, str):
        key = INPUT_ALIASES.get(value, value)
        if key not in NAMED_INPUTS:
            raise InvalidArgumentError(f"unknown input state {value!r}")
        return NAMED_INPUTS[key]
    a, b = (complex(v) for v in value)
    return a, b


@dataclass(frozen=True)
class ProtocolConfig:
    """Input amplitudes, register layout and optional noise for one run."""

    a: complex
    b: complex
    layout: RegisterLayout = THEORY_LAYOUT
    noise: "NoiseModel | None" = None
    pps_alpha: float | None = None

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgumentError(f"|a|^2 + |b|^2 = {norm!r}, expected 1")
        if self.layout.n_qubits != 4:
            raise InvalidArgumentError("the transfer register has exactly four qubits")
        if self.pps_alpha is not None and not 0.0 <= self.pps_alpha <= 1.0:
            raise InvalidArgumentError(f"pps_alpha must lie in [0, 1], got {self.pps_alpha}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def named(cls, name: str, **kwargs) -> "ProtocolConfig":
        a, b = resolve_input(name)
        return cls(a, b, **kwargs)

    @property
    def phi(self) -> StateVector:
        return StateVector([self.a, self.b])


def arena_walk() -> CycleWalk:
    return CycleWalk(4, (P1, P0))


def initial_state(config: ProtocolConfig) -> StateVector:
    """``|00> x |phi> x |0>`` placed in the configured layout."""
    zero = StateVector([1.0, 0.0])
    written_order = kron_compose([kron_compose([zero, zero]), config.phi, zero])
    canonical = permute_qubits(written_order, _INPUT_ORDER)
    return permute_qubits(canonical, config.layout)


def _walk_gates(stage: str) -> list:
    walk = arena_walk()
    alice = CoinSpec(A_C, I2)
    bob = CoinSpec(B_C, H)
    gates = list(step_gates(walk, alice))
    if stage == "w1":
        return gates
    gates += step_gates(walk, bob)
    if stage == "w2":
        return gates
    gates.append(Gate(H, (A_C,), "H"))
    return gates


def correction_circuit(layout: RegisterLayout = THEORY_LAYOUT) -> Circuit:
    """Controlled Bob corrections, one per populated measurement branch."""
    gates = []
    for branch in TRANSFER_TABLE:
        p1, p0 = (int(c) for c in branch.arena_bits)
        controls = ((A_C, branch.alice_coin_bit), (P1, p1), (P0, p0))
        base = Gate(branch.matrix, (B_C,), branch.correction)
        gates.append(ControlledGate(base, controls))
    return Circuit(4, tuple(gates)).relabel(layout)


def protocol_circuit(layout: RegisterLayout = THEORY_LAYOUT, stage: str = "full",
                     prepare: tuple[complex, complex] | None = None) -> Circuit:
    """Transfer circuit truncated at ``stage``.

    Stages: ``w1`` (Alice's step), ``w2`` (both steps), ``walk`` (both steps
    plus the Hadamard on Alice's coin), ``full`` (walk plus corrections).
    ``prepare`` prepends a unitary taking Alice's coin from ``|0>`` to
    ``a|0> + b|1>``.
    """
    if stage not in ("w1", "w2", "walk", "full"):
        raise InvalidArgumentError(f"unknown protocol stage {stage!r}")
    gates = []
    if prepare is not None:
        gates.append(Gate(state_prep_unitary(*prepare), (A_C,), "U_phi"))
    gates += _walk_gates(stage)
    circuit = Circuit(4, tuple(gates)).relabel(layout)
    if stage == "full":
        circuit = circuit + correction_circuit(layout)
    return circuit


def correction_for_branch(alice_coin_bit: int, arena_bits: str) -> NDArray:
    """Bob's correction for Alice's coin reading and the arena reading."""
    branch = _TABLE_LOOKUP.get((int(alice_coin_bit), str(arena_bits)))
    if branch is None:
        raise UndefinedBranchError(
            f"no correction for alice_coin={alice_coin_bit}, arena={arena_bits}"
        )
    return branch.matrix


def correction_unitary(layout: RegisterLayout = THEORY_LAYOUT) -> NDArray:
    return circuit_unitary(correction_circuit(layout))


def ideal_state_after_walk(config: ProtocolConfig) -> StateVector:
    """Closed-form register state after both walk steps and H on Alice's coin."""
    a, b = config.a, config.b
    amps = np.zeros(16, dtype=np.complex128)
    # (A_c, P1, P0) prefix -> Bob's (|0>, |1>) amplitudes
    terms = {
        "000": (b, a),
        "100": (-b, a),
        "011": (a, b),
        "111": (a, -b),
    }
    for prefix, (c0, c1) in terms.items():
        base = int(prefix, 2) << 1
        amps[base] = 0.5 * c0
        amps[base + 1] = 0.5 * c1
    return permute_qubits(StateVector(amps), config.layout)


def ideal_final_state(config: ProtocolConfig) -> StateVector:
    """Closed-form register state after the corrections (Bob holds ``phi``)."""
    amps = np.zeros(16, dtype=np.complex128)
    for prefix in ("000", "100", "011", "111"):
        base = int(prefix, 2) << 1
        amps[base] = 0.5 * config.a
        amps[base + 1] = 0.5 * config.b
    return permute_qubits(StateVector(amps), config.layout)


def run_protocol_coherent(config: ProtocolConfig, stage: str = "full"):
    """Run the transfer circuit up to ``stage``.

    Returns a ``StateVector`` for noiseless pure runs and a ``DensityMatrix``
    when a pseudopure input or a noise model is configured.
    """
    if config.noise is not None:
        from .noise import noisy_protocol_run

        stop = "box_i" if stage == "walk" else None
        if stage not in ("walk", "full"):
            raise InvalidArgumentError("noisy runs stop after 'walk' or 'full'")
        return noisy_protocol_run(config, config.noise, stop_after=stop)
    state = initial_state(config)
    if config.pps_alpha is not None:
        state = make_pps(state, config.pps_alpha)
    return protocol_circuit(config.layout, stage).run(state)


def bob_state(state, layout: RegisterLayout = THEORY_LAYOUT) -> DensityMatrix:
    return partial_trace(state, [layout.physical(B_C)])


def branch_correction(branch: str, layout: RegisterLayout = NMR_LAYOUT) -> TransferBranch:
    """Table entry for ``branch``: bits of the non-Bob qubits in physical order."""
    qubits = _alice_side(layout)
    if len(branch) != len(qubits) or set(branch) - {"0", "1"}:
        raise InvalidArgumentError(f"branch {branch!r} must be a {len(qubits)}-bit string")
    role = {layout.logical(p): int(bit) for p, bit in zip(qubits, branch)}
    arena = f"{role[P1]}{role[P0]}"
    entry = _TABLE_LOOKUP.get((role[A_C], arena))
    if entry is None:
        raise UndefinedBranchError(f"branch {branch} reads arena {arena}, which has no correction")
    return entry


def _alice_side(layout: RegisterLayout) -> list[int]:
    bob = layout.physical(B_C)
    return [p for p in range(layout.n_qubits) if p != bob]


def populated_branches(layout: RegisterLayout = NMR_LAYOUT) -> tuple[str, ...]:
    """Branch labels with a correction, sorted; for the NMR layout 000, 010, 101, 111."""
    out = []
    for bits in range(8):
        label = format(bits, "03b")
        try:
            branch_correction(label, layout)
        except UndefinedBranchError:
            continue
        out.append(label)
    return tuple(out)


@dataclass(frozen=True)
class BranchResult:
    branch: str
    probability: float
    sigma: DensityMatrix
    rho: DensityMatrix
    correction: str


def _reconstruct(rho, branch: str, layout: RegisterLayout) -> BranchResult:
    entry = branch_correction(branch, layout)
    sigma, prob = project_and_renormalize(rho, _alice_side(layout), branch)
    m = entry.matrix
    corrected = m @ sigma.elements @ m.conj().T
    return BranchResult(branch, prob, sigma, DensityMatrix(corrected), entry.correction)


def reconstruct_bob(rho, branch: str, layout: RegisterLayout = NMR_LAYOUT) -> DensityMatrix:
    """Bob's state after projecting the other qubits on ``branch`` and correcting."""
    return _reconstruct(as_density(rho), branch, layout).rho


def reconstruct_branches(rho, layout: RegisterLayout = NMR_LAYOUT,
                         branches: Sequence[str] | None = None) -> dict[str, BranchResult]:
    rho = as_density(rho)
    labels = populated_branches(layout) if branches is None else branches
    return {label: _reconstruct(rho, label, layout) for label in labels}


def sample_branches(config: ProtocolConfig, shots: int, seed: int) -> Mapping[str, object]:
    """Measurement-and-feedback variant: sample Alice's readout, then correct.

    Every shot measures Alice's coin and the arena after the walk and
    applies the tabulated correction to Bob's conditional state. Returns
    branch counts and the shot-averaged corrected Bob state.
    """
    if shots < 1:
        raise InvalidArgumentError("shots must be positive")
    rng = np.random.default_rng(seed)
    rho = as_density(run_protocol_coherent(config, stage="walk"))
    layout = config.layout
    labels = [format(k, "03b") for k in range(8)]
    probs = np.zeros(8)
    conditional = {}
    for k, label in enumerate(labels):
        try:
            sigma, p = project_and_renormalize(rho, _alice_side(layout), label)
        except ZeroProbabilityBranchError:
            continue
        probs[k] = p
        conditional[label] = sigma
    probs /= probs.sum()
    outcomes = rng.choice(8, size=shots, p=probs)
    counts = {label: 0 for label in labels}
    bob = np.zeros((2, 2), dtype=np.complex128)
    for k in outcomes:
        label = labels[k]
        counts[label] += 1
        try:
            m = branch_correction(label, layout).matrix
        except UndefinedBranchError:
            m = I2
        bob += m @ conditional[label].elements @ m.conj().T
    bob /= shots
    return {"counts": {k: v for k, v in counts.items() if v}, "bob": DensityMatrix(bob)}
