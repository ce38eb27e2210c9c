"""
Pauli-basis state tomography, single-qubit process tomography, fidelities
and the projector-based entanglement witness.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .circuit import I2, X, Y, Z
from .errors import InvalidArgumentError, UnderdeterminedError
from .qstate import DensityMatrix, StateVector, as_density

__all__ = [
    "PauliString",
    "MeasurementRecord",
    "ProcessMatrix",
    "PAULI_BASIS",
    "pauli_strings",
    "pauli_expectations",
    "sample_expectations",
    "linear_inversion",
    "project_to_density",
    "reconstruct_state",
    "state_fidelity",
    "witness_value",
    "chi_from_unitary",
    "apply_process",
    "qpt_single_qubit",
    "process_fidelity",
    "write_records_csv",
    "read_records_csv",
    "QPT_INPUTS",
]

_PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_BASIS = (I2, X, Y, Z)


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        letters = str(self.letters).upper()
        if not letters or set(letters) - set(_PAULI):
            raise InvalidArgumentError(f"{self.letters!r} is not a Pauli string")
        object.__setattr__(self, "letters", letters)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def matrix(self) -> NDArray:
        return _pauli_matrix(self.letters)

    def __str__(self) -> str:
        return self.letters


@lru_cache(maxsize=None)
def _pauli_matrix(letters: str) -> NDArray:
    m = np.ones((1, 1), dtype=np.complex128)
    for c in letters:
        m = np.kron(m, _PAULI[c])
    m.flags.writeable = False
    return m


def pauli_strings(n_qubits: int) -> list[PauliString]:
    return [PauliString("".join(p)) for p in itertools.product("IXYZ", repeat=n_qubits)]


@dataclass(frozen=True)
class MeasurementRecord:
    observable: PauliString
    expectation: float
    uncertainty: float = 0.0

    def __post_init__(self):
        if not isinstance(self.observable, PauliString):
            object.__setattr__(self, "observable", PauliString(self.observable))
        if self.uncertainty < 0:
            raise InvalidArgumentError("uncertainty must be non-negative")
        if abs(self.expectation) > 1 + 3 * self.uncertainty + 1e-12:
            raise InvalidArgumentError(
                f"<{self.observable}> = {self.expectation} is outside [-1, 1]"
            )


def pauli_expectations(rho) -> list[MeasurementRecord]:
    """Exact ``Tr[P rho]`` for every Pauli string on the register."""
    rho = as_density(rho)
    out = []
    for p in pauli_strings(rho.n_qubits):
        value = float(np.real(np.trace(p.matrix() @ rho.elements)))
        out.append(MeasurementRecord(p, float(np.clip(value, -1.0, 1.0))))
    return out


def sample_expectations(rho, sigma: float, seed: int) -> list[MeasurementRecord]:
    """Exact expectations with i.i.d. Gaussian error, clamped to ``[-1, 1]``.

    The identity string is noiseless since it only encodes normalization.
    """
    if sigma < 0:
        raise InvalidArgumentError("sigma must be non-negative")
    exact = pauli_expectations(rho)
    if sigma == 0:
        return exact
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=len(exact))
    out = []
    for rec, eps in zip(exact, noise):
        if set(rec.observable.letters) == {"I"}:
            out.append(rec)
            continue
        value = float(np.clip(rec.expectation + eps, -1.0, 1.0))
        out.append(MeasurementRecord(rec.observable, value, sigma))
    return out


def linear_inversion(records: Iterable[MeasurementRecord]) -> NDArray:
    """Unconstrained estimate ``(1/2^n) sum_P <P> P``; missing identity counts as 1."""
    records = list(records)
    if not records:
        raise UnderdeterminedError("no measurement records")
    n = records[0].observable.n_qubits
    values: dict[str, float] = {}
    for rec in records:
        if rec.observable.n_qubits != n:
            raise InvalidArgumentError("records mix register sizes")
        values[rec.observable.letters] = rec.expectation
    values.setdefault("I" * n, 1.0)
    missing = [p.letters for p in pauli_strings(n) if p.letters not in values]
    if missing:
        raise UnderdeterminedError(
            f"{len(missing)} Pauli expectation(s) missing, e.g. {missing[0]}"
        )
    d = 2**n
    est = np.zeros((d, d), dtype=np.complex128)
    for letters, v in values.items():
        est += v * _pauli_matrix(letters)
    return est / d


def _simplex_projection(values: NDArray) -> NDArray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(values)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    last = np.nonzero(u - (css - 1) / k > 0)[0][-1]
    theta = (css[last] - 1) / (last + 1)
    return np.maximum(values - theta, 0.0)


def project_to_density(mat: ArrayLike) -> DensityMatrix:
    """Frobenius-nearest unit-trace PSD matrix to the Hermitian part of ``mat``."""
    mat = np.asarray(mat, dtype=np.complex128)
    herm = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(herm)
    w = _simplex_projection(w)
    out = (v * w) @ v.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T))


def reconstruct_state(records: Iterable[MeasurementRecord]) -> DensityMatrix:
    """Linear inversion followed by projection onto physical states."""
    return project_to_density(linear_inversion(records))


def _overlap_fidelity(a: NDArray, b: NDArray) -> float:
    num = abs(np.trace(a @ b.conj().T))
    den = np.sqrt(np.real(np.trace(a @ a.conj().T)) * np.real(np.trace(b @ b.conj().T)))
    if den <= 0:
        raise InvalidArgumentError("fidelity undefined for a zero matrix")
    return float(min(1.0, num / den))


def state_fidelity(rho_a, rho_b) -> float:
    """Normalized Hilbert-Schmidt overlap ``|Tr[a b^dag]| / sqrt(Tr[a a^dag] Tr[b b^dag])``."""
    a = as_density(rho_a).elements
    b = as_density(rho_b).elements
    if a.shape != b.shape:
        raise InvalidArgumentError("states act on different registers")
    return _overlap_fidelity(a, b)


def witness_value(rho, psi_ref: StateVector) -> float:
    """``Tr[(I/2 - |psi><psi|) rho]``; negative values flag genuine multipartite entanglement."""
    rho = as_density(rho)
    psi = psi_ref.amplitudes
    if psi.size != rho.dim:
        raise InvalidArgumentError("witness reference and state dimensions differ")
    overlap = float(np.real(np.vdot(psi, rho.elements @ psi)))
    return 0.5 - overlap


@dataclass(frozen=True)
class ProcessMatrix:
    """Single-qubit process in the ``{I, X, Y, Z}`` operator-sum basis.

    ``E(rho) = sum_mn chi[m, n] E_m rho E_n^dag``.
    """

    chi: NDArray

    def __post_init__(self):
        chi = np.array(self.chi, dtype=np.complex128)
        if chi.shape != (4, 4):
            raise InvalidArgumentError("process matrix must be 4x4")
        if np.max(np.abs(chi - chi.conj().T)) > 1e-8:
            raise InvalidArgumentError("process matrix is not Hermitian")
        if np.linalg.eigvalsh(0.5 * (chi + chi.conj().T))[0] < -1e-8:
            raise InvalidArgumentError("process matrix is not positive semidefinite")
        if not np.allclose(_tp_operator(chi), I2, atol=1e-8, rtol=0):
            raise InvalidArgumentError("process matrix is not trace preserving")
        chi.flags.writeable = False
        object.__setattr__(self, "chi", chi)

    def apply(self, rho) -> NDArray:
        return apply_process(self.chi, as_density(rho).elements)

    def support(self, tol: float = 1e-8) -> set[str]:
        return {"IXYZ"[m] for m in range(4) if abs(self.chi[m, m]) > tol}


def _tp_operator(chi: NDArray) -> NDArray:
    return sum(chi[m, n] * PAULI_BASIS[n].conj().T @ PAULI_BASIS[m]
               for m in range(4) for n in range(4))


def chi_from_unitary(u: ArrayLike) -> NDArray:
    """Rank-one process matrix of conjugation by the 2x2 unitary ``u``."""
    u = np.asarray(u, dtype=np.complex128)
    c = np.array([np.trace(E.conj().T @ u) / 2 for E in PAULI_BASIS])
    return np.outer(c, c.conj())


def apply_process(chi: ArrayLike, rho: ArrayLike) -> NDArray:
    chi = np.asarray(chi)
    rho = np.asarray(rho)
    return sum(chi[m, n] * PAULI_BASIS[m] @ rho @ PAULI_BASIS[n].conj().T
               for m in range(4) for n in range(4))


_S = 1 / np.sqrt(2)
QPT_INPUTS = tuple(
    StateVector(v).to_density()
    for v in ([1, 0], [0, 1], [_S, _S], [_S, 1j * _S])
)


def _mat_sqrt_inv(m: NDArray) -> NDArray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if w[0] <= 1e-12:
        raise UnderdeterminedError("process estimate has a singular completeness operator")
    return (v / np.sqrt(w)) @ v.conj().T


def qpt_single_qubit(pairs: Sequence[tuple[object, object]]) -> ProcessMatrix:
    """Least-squares process matrix from ``(rho_in, rho_out)`` pairs.

    The raw solution is projected onto PSD matrices, then the equivalent
    Kraus operators are renormalized so the process is trace preserving.
    """
    if not pairs:
        raise UnderdeterminedError("no input/output pairs")
    rows, rhs = [], []
    for rho_in, rho_out in pairs:
        a = np.asarray(getattr(rho_in, "elements", rho_in), dtype=np.complex128)
        b = np.asarray(getattr(rho_out, "elements", rho_out), dtype=np.complex128)
        cols = [(PAULI_BASIS[m] @ a @ PAULI_BASIS[n].conj().T).ravel()
                for m in range(4) for n in range(4)]
        rows.append(np.stack(cols, axis=1))
        rhs.append(b.ravel())
    design = np.vstack(rows)
    if np.linalg.matrix_rank(design, tol=1e-10) < 16:
        raise UnderdeterminedError("input states are not informationally complete")
    sol, *_ = np.linalg.lstsq(design, np.concatenate(rhs), rcond=None)
    chi = sol.reshape(4, 4)
    chi = 0.5 * (chi + chi.conj().T)
    w, v = np.linalg.eigh(chi)
    w = np.clip(w, 0.0, None)
    # Kraus form K_k = sqrt(w_k) sum_m v[m, k] E_m, then K_k -> K_k T^{-1/2}
    kraus = [np.sqrt(w[k]) * sum(v[m, k] * PAULI_BASIS[m] for m in range(4)) for k in range(4)]
    completeness = sum(K.conj().T @ K for K in kraus)
    t_inv = _mat_sqrt_inv(completeness)
    chi_tp = np.zeros((4, 4), dtype=np.complex128)
    for K in kraus:
        K = K @ t_inv
        c = np.array([np.trace(E.conj().T @ K) / 2 for E in PAULI_BASIS])
        chi_tp += np.outer(c, c.conj())
    return ProcessMatrix(0.5 * (chi_tp + chi_tp.conj().T))


def process_fidelity(chi_a, chi_b) -> float:
    a = np.asarray(getattr(chi_a, "chi", chi_a), dtype=np.complex128)
    b = np.asarray(getattr(chi_b, "chi", chi_b), dtype=np.complex128)
    if a.shape != b.shape:
        raise InvalidArgumentError("process matrices differ in dimension")
    return _overlap_fidelity(a, b)


CSV_FIELDS = ("observable", "expectation", "uncertainty")


def write_records_csv(records: Iterable[MeasurementRecord], path: str | os.PathLike | None = None) -> str:
    """Serialize records as ``observable,expectation,uncertainty`` rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow([rec.observable.letters, repr(float(rec.expectation)), repr(float(rec.uncertainty))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_records_csv(source: str | os.PathLike) -> list[MeasurementRecord]:
    with open(source, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(CSV_FIELDS[:2]) - set(reader.fieldnames):
            raise InvalidArgumentError(f"record CSV must have columns {', '.join(CSV_FIELDS)}")
        return [
            MeasurementRecord(
                PauliString(row["observable"].strip()),
                float(row["expectation"]),
                float(row.get("uncertainty") or 0.0),
            )
            for row in reader
        ]
