"""
Weakly coupled spin-1/2 register model and pulse-sequence timing.

The secular Hamiltonian is diagonal in the Zeeman basis, so free evolution
is an exact phase map.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml
from numpy.typing import NDArray

from .errors import ConfigError, InvalidArgumentError
from .qstate import DensityMatrix, StateVector

__all__ = [
    "MOLECULE_ENV",
    "MoleculeParams",
    "SequenceDurations",
    "hamiltonian",
    "free_evolution",
    "coupling_delay",
    "sequence_duration",
    "load_molecule",
    "load_segments",
    "default_molecule_path",
    "default_segments_path",
]

MOLECULE_ENV = "QWTRANSFER_MOLECULE"


@dataclass(frozen=True)
class MoleculeParams:
    labels: tuple[str, ...]
    chemical_shifts: tuple[float, ...]
    j_couplings: NDArray
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    rotating_frame_freq: float = 0.0
    name: str = ""
    placeholder: bool = False

    def __post_init__(self):
        n = len(self.labels)
        j = np.array(self.j_couplings, dtype=float)
        if j.shape != (n, n):
            raise InvalidArgumentError(f"J table must be {n}x{n}")
        if not np.allclose(j, j.T) or np.any(np.diag(j) != 0):
            raise InvalidArgumentError("J table must be symmetric with zero diagonal")
        for field_name in ("chemical_shifts", "t1", "t2"):
            values = tuple(float(v) for v in getattr(self, field_name))
            if len(values) != n:
                raise InvalidArgumentError(f"{field_name} needs one value per spin")
            object.__setattr__(self, field_name, values)
        if min(self.t1) <= 0 or min(self.t2) <= 0:
            raise InvalidArgumentError("relaxation times must be positive")
        j.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "j_couplings", j)

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidArgumentError(f"unknown spin {label!r}") from None

    def coupling(self, a: str | int, b: str | int) -> float:
        i = a if isinstance(a, int) else self.index(a)
        k = b if isinstance(b, int) else self.index(b)
        return float(self.j_couplings[i, k])


@dataclass(frozen=True)
class SequenceDurations:
    segments: tuple[tuple[str, float], ...]

    def __post_init__(self):
        segs = tuple((str(label), float(sec)) for label, sec in self.segments)
        if any(sec < 0 for _, sec in segs):
            raise InvalidArgumentError("segment durations must be non-negative")
        object.__setattr__(self, "segments", segs)

    def as_dict(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for label, sec in self.segments:
            out[label] = out.get(label, 0.0) + sec
        return out

    def until(self, label: str) -> "SequenceDurations":
        """Segments up to and including the first one called ``label``."""
        labels = [lab for lab, _ in self.segments]
        if label not in labels:
            raise ConfigError(f"no segment named {label!r}")
        return SequenceDurations(self.segments[: labels.index(label) + 1])


def _iz(n: int, k: int) -> NDArray:
    # diagonal of I_z on spin k: +1/2 for |0>, -1/2 for |1>
    bits = (np.arange(2**n) >> (n - 1 - k)) & 1
    return 0.5 - bits


def _diagonal(params: MoleculeParams) -> NDArray:
    n = params.n_spins
    diag = np.zeros(2**n)
    for i in range(n):
        offset = 2 * np.pi * (params.chemical_shifts[i] - params.rotating_frame_freq)
        diag -= offset * _iz(n, i)
    for i in range(n):
        for k in range(i + 1, n):
            diag += 2 * np.pi * params.j_couplings[i, k] * _iz(n, i) * _iz(n, k)
    return diag


def hamiltonian(params: MoleculeParams) -> NDArray:
    """Rotating-frame secular Hamiltonian in rad/s (diagonal in the Zeeman basis)."""
    return np.diag(_diagonal(params)).astype(np.complex128)


def free_evolution(state, params: MoleculeParams, t: float):
    """Exact ``exp(-iHt)`` evolution; the Hamiltonian is diagonal so this is a phase map."""
    if t < 0:
        raise InvalidArgumentError("evolution time must be non-negative")
    phases = np.exp(-1j * _diagonal(params) * t)
    if isinstance(state, StateVector):
        return StateVector(phases * state.amplitudes, validate=False)
    if isinstance(state, DensityMatrix):
        return DensityMatrix(phases[:, None] * state.elements * phases.conj()[None, :], validate=False)
    u = np.asarray(state)
    return phases[:, None] * u


def coupling_delay(params: MoleculeParams, a: str | int, b: str | int) -> float:
    """Delay ``1/(2 J)`` that builds a maximal ZZ phase between two spins."""
    j = params.coupling(a, b)
    if j == 0:
        raise InvalidArgumentError("spins are uncoupled")
    return 1.0 / (2.0 * abs(j))


def sequence_duration(durations: SequenceDurations | Sequence[tuple[str, float]] | Mapping[str, float]) -> float:
    if isinstance(durations, SequenceDurations):
        return float(sum(sec for _, sec in durations.segments))
    if isinstance(durations, Mapping):
        return float(sum(durations.values()))
    return float(sum(sec for _, sec in durations))


def default_molecule_path() -> Path:
    env = os.environ.get(MOLECULE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("qwtransfer") / "data" / "molecule.yaml"))


def default_segments_path() -> Path:
    return Path(str(resources.files("qwtransfer") / "data" / "segments.yaml"))


def _read_yaml(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at top level")
    return data


def load_molecule(path: str | os.PathLike | None = None) -> MoleculeParams:
    """Read a molecule file (spins, shifts, J table, T1/T2).

    Couplings are listed as ``"C1-C3": 1.02``; unlisted pairs are uncoupled.
    """
    path = default_molecule_path() if path is None else path
    data = _read_yaml(path)
    try:
        labels = [str(s) for s in data["spins"]]
        shifts = data["chemical_shifts_hz"]
        t1 = data["t1_s"]
        t2 = data["t2_s"]
        couplings = data.get("j_couplings_hz", {}) or {}
        n = len(labels)
        j = np.zeros((n, n))
        for pair, value in couplings.items():
            a, b = (s.strip() for s in str(pair).split("-"))
            i, k = labels.index(a), labels.index(b)
            if i == k:
                raise ConfigError(f"self-coupling {pair} is not allowed")
            j[i, k] = j[k, i] = float(value)
        return MoleculeParams(
            labels=tuple(labels),
            chemical_shifts=tuple(shifts),
            j_couplings=j,
            t1=tuple(t1),
            t2=tuple(t2),
            rotating_frame_freq=float(data.get("rotating_frame_hz", 0.0)),
            name=str(data.get("name", "")),
            placeholder=bool(data.get("placeholder", False)),
        )
    except (KeyError, ValueError, TypeError, InvalidArgumentError) as exc:
        raise ConfigError(f"malformed molecule file {path}: {exc}") from exc


def load_segments(path: str | os.PathLike | None = None) -> SequenceDurations:
    """Read ``segments: [{label: ..., seconds: ...}, ...]``."""
    path = default_segments_path() if path is None else path
    data = _read_yaml(path)
    try:
        return SequenceDurations(tuple((s["label"], s["seconds"]) for s in data["segments"]))
    except (KeyError, TypeError, ValueError, InvalidArgumentError) as exc:
        raise ConfigError(f"malformed segment file {path}: {exc}") from exc
