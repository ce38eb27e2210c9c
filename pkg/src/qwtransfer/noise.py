"""
Kraus channels for T1/T2 relaxation and a segment-wise noisy transfer run.

Noise is applied at segment boundaries: each segment's ideal unitary acts
first, then every qubit relaxes independently for the segment duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .circuit import I2, X, Y, Z, Circuit, apply_gate, apply_operator
from .errors import ConfigError, ContractViolationError, InvalidArgumentError
from .qstate import DensityMatrix, StateVector, make_pps, permute_qubits
from .tomography import state_fidelity, witness_value
from .transfer import (
    NMR_LAYOUT,
    ProtocolConfig,
    bob_state,
    ideal_state_after_walk,
    protocol_circuit,
)

__all__ = [
    "KrausChannel",
    "NoiseModel",
    "SEGMENTS",
    "amplitude_damping",
    "phase_damping",
    "depolarizing",
    "apply_channel",
    "relax",
    "noisy_protocol_trajectory",
    "noisy_protocol_run",
    "sweep_noise",
]

TP_TOL = 1e-10
SEGMENTS = ("pps", "box_i", "box_ii")


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[NDArray, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=np.complex128) for k in self.operators)
        if not ops:
            raise InvalidArgumentError("a channel needs at least one Kraus operator")
        d = 2 ** len(self.targets)
        if any(k.shape != (d, d) for k in ops):
            raise InvalidArgumentError(f"Kraus operators must be {d}x{d}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    def completeness(self) -> NDArray:
        return sum(k.conj().T @ k for k in self.operators)

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        d = self.operators[0].shape[0]
        return bool(np.allclose(self.completeness(), np.eye(d), atol=tol, rtol=0))


def _check_time(t: float, const: float, name: str) -> None:
    if not const > 0:
        raise InvalidArgumentError(f"{name} must be positive, got {const}")
    if t < 0:
        raise InvalidArgumentError(f"duration must be non-negative, got {t}")


def amplitude_damping(t: float, T1: float, target: int = 0) -> KrausChannel:
    """Energy relaxation towards ``|0>`` with ``gamma = 1 - exp(-t/T1)``."""
    _check_time(t, T1, "T1")
    gamma = -math.expm1(-t / T1) if math.isfinite(t) else 1.0
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]])
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]])
    return KrausChannel((k0, k1), (target,))


def phase_damping(t: float, T2: float, target: int = 0) -> KrausChannel:
    """Dephasing that scales coherences by ``exp(-t/T2)``."""
    _check_time(t, T2, "T2")
    lam = math.exp(-t / T2)
    k0 = np.array([[1, 0], [0, lam]])
    k1 = np.array([[0, 0], [0, math.sqrt(max(0.0, 1 - lam * lam))]])
    return KrausChannel((k0, k1), (target,))


def depolarizing(p: float, target: int = 0) -> KrausChannel:
    """``rho -> (1 - p) rho + p I/2``."""
    if not 0 <= p <= 1:
        raise InvalidArgumentError(f"depolarizing probability must lie in [0, 1], got {p}")
    ops = (math.sqrt(1 - 0.75 * p) * I2,) + tuple(math.sqrt(p / 4) * P for P in (X, Y, Z))
    return KrausChannel(ops, (target,))


def apply_channel(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    if not channel.is_trace_preserving():
        raise ContractViolationError("channel is not trace preserving")
    out = np.zeros_like(rho.elements)
    for k in channel.operators:
        out = out + apply_operator(rho, k, channel.targets).elements
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out)


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit relaxation constants (logical order) and segment durations.

    ``t1``/``t2`` are indexed by logical qubit ``(A_c, P1, P0, B_c)``.
    ``durations`` maps segment labels to seconds; ``gate_error`` is an
    optional depolarizing probability applied per qubit after each segment.
    """

    t1: tuple[float, ...]
    t2: tuple[float, ...]
    durations: Mapping[str, float] = field(default_factory=dict)
    gate_error: float = 0.0

    def __post_init__(self):
        t1 = tuple(float(v) for v in self.t1)
        t2 = tuple(float(v) for v in self.t2)
        if len(t1) != len(t2):
            raise InvalidArgumentError("t1 and t2 must cover the same qubits")
        for a, b in zip(t1, t2):
            if not (a > 0 and b > 0):
                raise InvalidArgumentError("relaxation times must be positive")
            if b > 2 * a * (1 + 1e-12):
                raise InvalidArgumentError(f"T2={b} exceeds 2*T1={2 * a}")
        durations = {str(k): float(v) for k, v in dict(self.durations).items()}
        if any(v < 0 for v in durations.values()):
            raise InvalidArgumentError("segment durations must be non-negative")
        if not 0 <= self.gate_error <= 1:
            raise InvalidArgumentError("gate_error must lie in [0, 1]")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        object.__setattr__(self, "durations", durations)

    @classmethod
    def from_molecule(cls, molecule, durations: Mapping[str, float], gate_error: float = 0.0) -> "NoiseModel":
        """Map per-spin constants of the molecule register onto logical qubits."""
        n = len(NMR_LAYOUT.permutation)
        if len(molecule.t1) != n:
            raise ConfigError(f"molecule must describe {n} spins")
        t1 = tuple(molecule.t1[NMR_LAYOUT.physical(q)] for q in range(n))
        t2 = tuple(molecule.t2[NMR_LAYOUT.physical(q)] for q in range(n))
        return cls(t1, t2, durations, gate_error)

    @classmethod
    def noiseless(cls, durations: Mapping[str, float] | None = None, n: int = 4) -> "NoiseModel":
        inf = (math.inf,) * n
        return cls(inf, inf, durations or {s: 0.0 for s in SEGMENTS})

    def scaled(self, duration_scale: float = 1.0, t2_scale: float = 1.0) -> "NoiseModel":
        t2 = tuple(min(v * t2_scale, 2 * a) for v, a in zip(self.t2, self.t1))
        durations = {k: v * duration_scale for k, v in self.durations.items()}
        return replace(self, t2=t2, durations=durations)

    def with_uniform_t2(self, t2: float) -> "NoiseModel":
        return replace(self, t2=(float(t2),) * len(self.t1))

    def total_duration(self) -> float:
        return float(sum(self.durations.values()))


def relax(rho: DensityMatrix, model: NoiseModel, t: float, physical_of: Sequence[int]) -> DensityMatrix:
    """Independent T1 then T2 channels on every qubit for duration ``t``."""
    if t == 0 and model.gate_error == 0:
        return rho
    for q, (t1, t2) in enumerate(zip(model.t1, model.t2)):
        p = physical_of[q]
        if t > 0:
            if math.isfinite(t1):
                rho = apply_channel(rho, amplitude_damping(t, t1, p))
            if math.isfinite(t2):
                rho = apply_channel(rho, phase_damping(t, t2, p))
        if model.gate_error:
            rho = apply_channel(rho, depolarizing(model.gate_error, p))
    return rho


def _segments(config: ProtocolConfig) -> list[tuple[str, Circuit]]:
    layout = config.layout
    prep = protocol_circuit(layout, "walk", prepare=(config.a, config.b))
    walk_only = protocol_circuit(layout, "walk")
    full = protocol_circuit(layout, "full")
    box_ii = Circuit(4, full.gates[len(walk_only.gates):])
    return [("pps", Circuit(4)), ("box_i", prep), ("box_ii", box_ii)]


def noisy_protocol_trajectory(config: ProtocolConfig, model: NoiseModel,
                              stop_after: str | None = None,
                              granularity: str = "segment") -> dict[str, DensityMatrix]:
    """Register state at the end of each segment, keyed by segment label.

    With ``granularity="gate"`` a segment's duration is split evenly over its
    gates and relaxation follows every gate instead of the whole block.
    """
    if stop_after is not None and stop_after not in SEGMENTS:
        raise ConfigError(f"unknown segment {stop_after!r}")
    if granularity not in ("segment", "gate"):
        raise ConfigError(f"unknown noise granularity {granularity!r}")
    if len(model.t1) != config.layout.n_qubits:
        raise ConfigError("noise model width does not match the register")
    ground = StateVector.from_bits("0000")
    alpha = 1.0 if config.pps_alpha is None else config.pps_alpha
    rho = make_pps(permute_qubits(ground, config.layout), alpha)
    physical_of = config.layout.permutation
    out: dict[str, DensityMatrix] = {}
    for label, circuit in _segments(config):
        if label not in model.durations:
            raise ConfigError(f"noise model has no duration for segment {label!r}")
        t = model.durations[label]
        if granularity == "gate" and circuit.gates:
            dt = t / len(circuit.gates)
            for gate in circuit.gates:
                rho = relax(apply_gate(rho, gate), model, dt, physical_of)
        else:
            rho = relax(circuit.run(rho), model, t, physical_of)
        out[label] = rho
        if label == stop_after:
            break
    return out


def noisy_protocol_run(config: ProtocolConfig, model: NoiseModel,
                       stop_after: str | None = None, granularity: str = "segment") -> DensityMatrix:
    trajectory = noisy_protocol_trajectory(config, model, stop_after, granularity)
    return trajectory[stop_after or SEGMENTS[-1]]


def sweep_noise(config: ProtocolConfig, model: NoiseModel,
                duration_scales: Iterable[float] = (1.0,),
                t2_scales: Iterable[float] = (1.0,),
                granularity: str = "segment") -> list[dict[str, float]]:
    """Grid of noisy runs scored against the ideal protocol."""
    ideal = ideal_state_after_walk(replace(config, noise=None))
    phi = np.outer(config.phi.amplitudes, config.phi.amplitudes.conj())
    rows = []
    for ds in duration_scales:
        for ts in t2_scales:
            traj = noisy_protocol_trajectory(config, model.scaled(ds, ts), granularity=granularity)
            walk_state = traj["box_i"]
            final = traj["box_ii"]
            rows.append({
                "duration_scale": float(ds),
                "t2_scale": float(ts),
                "four_qubit_fidelity": state_fidelity(walk_state, ideal),
                "bob_fidelity": state_fidelity(bob_state(final, config.layout), DensityMatrix(phi)),
                "witness": witness_value(walk_state, ideal),
            })
    return rows
