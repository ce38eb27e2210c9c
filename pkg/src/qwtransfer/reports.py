"""Run configuration and machine-readable report assembly for the CLI."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ConfigError, ContractViolationError, InvalidArgumentError
from .nmr import load_molecule, load_segments
from .noise import NoiseModel, noisy_protocol_trajectory, sweep_noise
from .qstate import DensityMatrix, as_density
from .tomography import (
    QPT_INPUTS,
    chi_from_unitary,
    process_fidelity,
    qpt_single_qubit,
    reconstruct_state,
    sample_expectations,
    state_fidelity,
    witness_value,
)
from .transfer import (
    DISPLAY_NAMES,
    INPUT_ALIASES,
    LAYOUTS,
    NAMED_INPUTS,
    ProtocolConfig,
    bob_state,
    branch_correction,
    ideal_state_after_walk,
    protocol_circuit,
    initial_state,
    reconstruct_branches,
)
from .circuit import I2

SCHEMA_VERSION = 1

# Experimental values reported for the NMR implementation, for side-by-side display.
MEASURED = {
    "four_qubit_fidelity": {"zero": 0.9162, "one": 0.9180, "plus": 0.9357, "plus_i": 0.9183},
    "bob_fidelity": {"zero": 0.9918, "one": 0.9924, "plus": 0.96, "plus_i": 0.9896},
    "branch_fidelity": {
        "zero": {"101": 0.9632, "111": 0.9863, "000": 0.9906, "010": 0.9651},
        "one": {"101": 0.9809, "111": 0.9550, "000": 0.9943, "010": 0.9384},
        "plus": {"101": 0.9880, "111": 0.9928, "000": 0.9891, "010": 0.9775},
        "plus_i": {"101": 0.9785, "111": 0.9527, "000": 0.9712, "010": 0.9666},
    },
    "witness": {"plus": -0.4358, "plus_i": -0.4183},
    "process_fidelity": {"101": 0.9682, "111": 0.9658, "000": 0.9842, "010": 0.9450},
}


@dataclass(frozen=True)
class RunConfig:
    input: str = "plus"
    layout: str = "nmr"
    noise: bool = False
    molecule: str | None = None
    segments: str | None = None
    seed: int = 0
    sigma: float = 0.0
    granularity: str = "segment"

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ConfigError(f"unknown layout {self.layout!r}; choose from {sorted(LAYOUTS)}")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        parse_input(self.input)

    def digest(self) -> str:
        payload = json.dumps(
            {k: getattr(self, k) for k in self.__dataclass_fields__}, sort_keys=True
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def input_key(self) -> str | None:
        key = INPUT_ALIASES.get(self.input, self.input)
        return key if key in NAMED_INPUTS else None

    def protocol(self) -> ProtocolConfig:
        a, b = parse_input(self.input)
        return ProtocolConfig(a, b, layout=LAYOUTS[self.layout])

    def noise_model(self) -> NoiseModel:
        if not self.noise:
            return NoiseModel.noiseless()
        molecule = load_molecule(self.molecule)
        durations = load_segments(self.segments).as_dict()
        return NoiseModel.from_molecule(molecule, durations)


def parse_input(value: str) -> tuple[complex, complex]:
    """Named state or ``"a,b"`` with Python complex literals, e.g. ``"0.6,0.8j"``."""
    key = INPUT_ALIASES.get(value, value)
    if key in NAMED_INPUTS:
        return NAMED_INPUTS[key]
    parts = value.split(",")
    if len(parts) != 2:
        raise ConfigError(f"input must be one of {sorted(NAMED_INPUTS)} or 'a,b', got {value!r}")
    try:
        a, b = (complex(p.strip().replace(" ", "")) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"cannot parse amplitudes {value!r}: {exc}") from exc
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if abs(norm - 1.0) > 1e-6:
        raise ConfigError(f"amplitudes {value!r} are not normalized (norm {norm:.6g})")
    if norm != 1.0:
        a, b = a / norm, b / norm
    return a, b


def _num(x: float) -> float:
    x = round(float(x), 12)
    return 0.0 if x == 0 else x


def matrix_table(m) -> dict[str, list[list[float]]]:
    m = np.asarray(getattr(m, "elements", m))
    return {
        "real": [[_num(v) for v in row] for row in m.real],
        "imag": [[_num(v) for v in row] for row in m.imag],
    }


def _check_fidelity(value: float, what: str) -> float:
    if not (-1e-9 <= value <= 1 + 1e-9) or math.isnan(value):
        raise ContractViolationError(f"{what} fidelity {value} outside [0, 1]")
    return _num(min(1.0, max(0.0, value)))


def _metadata(cfg: RunConfig, command: str) -> dict[str, Any]:
    key = cfg.input_key
    return {
        "command": command,
        "input": cfg.input,
        "input_label": DISPLAY_NAMES.get(key, cfg.input) if key else cfg.input,
        "layout": cfg.layout,
        "noise": cfg.noise,
        "granularity": cfg.granularity,
        "seed": cfg.seed,
        "sigma": cfg.sigma,
        "config_hash": cfg.digest(),
    }


def _trajectory(cfg: RunConfig, protocol: ProtocolConfig) -> dict[str, DensityMatrix]:
    model = cfg.noise_model()
    if not cfg.noise:
        rho0 = as_density(initial_state(protocol))
        walk = protocol_circuit(protocol.layout, "walk").run(rho0)
        full = protocol_circuit(protocol.layout, "full").run(rho0)
        return {"box_i": walk, "box_ii": full}
    return noisy_protocol_trajectory(protocol, model, granularity=cfg.granularity)


def _is_superposition(protocol: ProtocolConfig) -> bool:
    return abs(protocol.a) > 1e-12 and abs(protocol.b) > 1e-12


def _branch_section(rho, protocol: ProtocolConfig) -> dict[str, Any]:
    phi = protocol.phi.to_density()
    out = {}
    for label, res in reconstruct_branches(rho, protocol.layout).items():
        out[label] = {
            "probability": _num(res.probability),
            "correction": res.correction,
            "bob_state": matrix_table(res.rho),
            "fidelity": _check_fidelity(state_fidelity(res.rho, phi), f"branch {label}"),
        }
    return out


def _reference(cfg: RunConfig) -> dict[str, Any]:
    key = cfg.input_key
    if key is None:
        return {}
    ref = {
        "four_qubit_fidelity": MEASURED["four_qubit_fidelity"][key],
        "bob_fidelity": MEASURED["bob_fidelity"][key],
        "branch_fidelity": MEASURED["branch_fidelity"][key],
    }
    if key in MEASURED["witness"]:
        ref["witness"] = MEASURED["witness"][key]
    return ref


def transfer_report(cfg: RunConfig) -> dict[str, Any]:
    protocol = cfg.protocol()
    traj = _trajectory(cfg, protocol)
    walk_state, final = traj["box_i"], traj["box_ii"]
    ideal = ideal_state_after_walk(protocol)
    bob = bob_state(final, protocol.layout)
    report = {
        "schema_version": SCHEMA_VERSION,
        "metadata": _metadata(cfg, "transfer"),
        "input_state": {"a": [_num(protocol.a.real), _num(protocol.a.imag)],
                        "b": [_num(protocol.b.real), _num(protocol.b.imag)]},
        "register": list(protocol.layout.labels),
        "four_qubit_state": matrix_table(walk_state),
        "bob_state": matrix_table(bob),
        "fidelities": {
            "four_qubit": _check_fidelity(state_fidelity(walk_state, ideal), "four-qubit"),
            "bob": _check_fidelity(state_fidelity(bob, protocol.phi), "Bob"),
        },
        "witness": _num(witness_value(walk_state, ideal)) if _is_superposition(protocol) else None,
        "branches": _branch_section(walk_state, protocol),
        "measured_reference": _reference(cfg),
    }
    return report


def _sampled_state(rho, cfg: RunConfig, offset: int = 0) -> DensityMatrix:
    if cfg.sigma == 0:
        return as_density(rho)
    return reconstruct_state(sample_expectations(rho, cfg.sigma, cfg.seed + offset))


def simulate_records(cfg: RunConfig):
    """Pauli expectations of the post-walk state with the configured readout noise."""
    protocol = cfg.protocol()
    return sample_expectations(_trajectory(cfg, protocol)["box_i"], cfg.sigma, cfg.seed)


def tomo_state_report(cfg: RunConfig, records=None) -> dict[str, Any]:
    protocol = cfg.protocol()
    ideal = ideal_state_after_walk(protocol)
    if records is not None:
        estimate = reconstruct_state(records)
    else:
        estimate = reconstruct_state(simulate_records(cfg))
    if estimate.n_qubits != 4:
        raise ConfigError("records must describe the four-qubit register")
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": _metadata(cfg, "tomo-state"),
        "register": list(protocol.layout.labels),
        "reconstructed_state": matrix_table(estimate),
        "fidelities": {"four_qubit": _check_fidelity(state_fidelity(estimate, ideal), "four-qubit")},
        "witness": _num(witness_value(estimate, ideal)) if _is_superposition(protocol) else None,
        "branches": _branch_section(estimate, protocol),
        "measured_reference": _reference(cfg),
    }


def tomo_process_report(cfg: RunConfig) -> dict[str, Any]:
    """Per-branch process matrices from the four tomography inputs."""
    layout = LAYOUTS[cfg.layout]
    sigma_pairs: dict[str, list] = {}
    rho_pairs: dict[str, list] = {}
    for k, rho_in in enumerate(QPT_INPUTS):
        amps = _amplitudes_of(rho_in)
        protocol = ProtocolConfig(*amps, layout=layout)
        walk_state = _sampled_state(_trajectory(cfg, protocol)["box_i"], cfg, offset=k)
        for label, res in reconstruct_branches(walk_state, layout).items():
            sigma_pairs.setdefault(label, []).append((rho_in, res.sigma))
            rho_pairs.setdefault(label, []).append((rho_in, res.rho))
    branches = {}
    identity_chi = chi_from_unitary(I2)
    for label in sorted(sigma_pairs):
        entry = branch_correction(label, layout)
        chi = qpt_single_qubit(sigma_pairs[label])
        chi_th = chi_from_unitary(entry.matrix)
        corrected = qpt_single_qubit(rho_pairs[label])
        branches[label] = {
            "correction": entry.correction,
            "chi": matrix_table(chi.chi),
            "chi_expected": matrix_table(chi_th),
            "process_fidelity": _check_fidelity(process_fidelity(chi, chi_th), f"process {label}"),
            "corrected_process_fidelity": _check_fidelity(
                process_fidelity(corrected, identity_chi), f"corrected process {label}"
            ),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": _metadata_qpt(cfg),
        "inputs": ["zero", "one", "plus", "plus_i"],
        "branches": branches,
        "measured_reference": {"process_fidelity": MEASURED["process_fidelity"]},
    }


def _metadata_qpt(cfg: RunConfig) -> dict[str, Any]:
    meta = _metadata(cfg, "tomo-process")
    meta["input"] = "zero,one,plus,plus_i"
    meta["input_label"] = "process tomography set"
    return meta


def _amplitudes_of(rho: DensityMatrix) -> tuple[complex, complex]:
    w, v = np.linalg.eigh(rho.elements)
    vec = v[:, -1]
    # fix global phase so the first nonzero amplitude is real positive
    k = int(np.argmax(np.abs(vec) > 1e-12))
    vec = vec * np.exp(-1j * np.angle(vec[k]))
    vec = vec / np.linalg.norm(vec)
    return complex(vec[0]), complex(vec[1])


def witness_report(cfg: RunConfig, rho: DensityMatrix | None = None) -> dict[str, Any]:
    protocol = cfg.protocol()
    if rho is None:
        if not _is_superposition(protocol):
            raise ConfigError("the witness targets superposition inputs (plus, plus_i or explicit a,b with a*b != 0)")
        rho = _sampled_state(_trajectory(cfg, protocol)["box_i"], cfg)
    if rho.n_qubits != 4:
        raise ConfigError("witness needs a four-qubit state")
    ideal = ideal_state_after_walk(protocol)
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": _metadata(cfg, "witness"),
        "witness": _num(witness_value(rho, ideal)),
        "measured_reference": {"witness": MEASURED["witness"].get(cfg.input_key or "", None)},
    }


def noise_sweep_rows(cfg: RunConfig, duration_scales: Iterable[float], t2_scales: Iterable[float]) -> list[dict[str, float]]:
    duration_scales, t2_scales = list(duration_scales), list(t2_scales)
    if not duration_scales or not t2_scales:
        raise ConfigError("sweep grid must be non-empty")
    protocol = cfg.protocol()
    molecule = load_molecule(cfg.molecule)
    durations = load_segments(cfg.segments).as_dict()
    model = NoiseModel.from_molecule(molecule, durations)
    rows = sweep_noise(protocol, model, duration_scales, t2_scales, granularity=cfg.granularity)
    if cfg.sigma > 0:
        ideal = ideal_state_after_walk(protocol)
        for k, (row, (ds, ts)) in enumerate(zip(rows, [(d, t) for d in duration_scales for t in t2_scales])):
            traj = noisy_protocol_trajectory(protocol, model.scaled(ds, ts), granularity=cfg.granularity)
            est = _sampled_state(traj["box_i"], cfg, offset=k)
            row["four_qubit_fidelity"] = state_fidelity(est, ideal)
            row["witness"] = witness_value(est, ideal)
    for row in rows:
        for key in ("four_qubit_fidelity", "bob_fidelity"):
            row[key] = _check_fidelity(row[key], key)
        row["witness"] = _num(row["witness"])
    return rows


SWEEP_COLUMNS = ("duration_scale", "t2_scale", "four_qubit_fidelity", "bob_fidelity", "witness")


def rows_to_csv(rows: list[dict[str, float]], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(row[c])) for c in columns])
    return buf.getvalue()


def matrix_to_csv(table: dict[str, list[list[float]]], prefix: dict[str, str] | None = None) -> list[list[str]]:
    rows = []
    real, imag = table["real"], table["imag"]
    for r, (rrow, irow) in enumerate(zip(real, imag)):
        for c, (re, im) in enumerate(zip(rrow, irow)):
            head = list(prefix.values()) if prefix else []
            rows.append(head + [str(r), str(c), repr(re), repr(im)])
    return rows


def density_csv(table: dict[str, list[list[float]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "col", "re", "im"])
    writer.writerows(matrix_to_csv(table))
    return buf.getvalue()


def chi_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["branch", "row", "col", "re", "im"])
    for label, entry in report["branches"].items():
        writer.writerows(matrix_to_csv(entry["chi"], {"branch": label}))
    return buf.getvalue()


def read_density_csv(path: str | Path) -> DensityMatrix:
    """Inverse of :func:`density_csv`."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        entries = [(int(r["row"]), int(r["col"]), float(r["re"]), float(r["im"])) for r in rows]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read density matrix from {path}: {exc}") from exc
    if not entries:
        raise ConfigError(f"{path} holds no matrix entries")
    d = max(max(r, c) for r, c, _, _ in entries) + 1
    m = np.zeros((d, d), dtype=np.complex128)
    for r, c, re, im in entries:
        m[r, c] = re + 1j * im
    try:
        return DensityMatrix(m)
    except InvalidArgumentError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dumps(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"
