"""
Coined discrete-time quantum walk on an n-cycle.

The walker register holds ``log2(n)`` position qubits. A coin in ``|0>``
moves the walker to ``v + 1 (mod n)``, a coin in ``|1>`` to ``v - 1 (mod n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Gate, apply_gate
from .errors import InvalidArgumentError, UnsupportedEncodingError
from .qstate import partial_trace

__all__ = ["CycleWalk", "CoinSpec", "gray_encoding", "build_shift", "coin_gate", "walk_step", "step_gates",
           "position_distribution"]


def gray_encoding(n_vertices: int) -> tuple[str, ...]:
    """Reflected Gray code; for 4 vertices: 00, 01, 11, 10."""
    width = _width(n_vertices)
    return tuple(format(v ^ (v >> 1), f"0{width}b") for v in range(n_vertices))


def _width(n_vertices: int) -> int:
    if n_vertices < 2 or n_vertices & (n_vertices - 1):
        raise UnsupportedEncodingError(
            f"cycle with {n_vertices} vertices cannot be encoded on whole qubits"
        )
    return n_vertices.bit_length() - 1


@dataclass(frozen=True)
class CycleWalk:
    n_vertices: int
    position_qubits: tuple[int, ...]
    encoding: tuple[str, ...] | None = None

    def __post_init__(self):
        width = _width(self.n_vertices)
        pos = tuple(int(q) for q in self.position_qubits)
        if len(pos) != width:
            raise InvalidArgumentError(
                f"{self.n_vertices}-cycle needs {width} position qubits, got {len(pos)}"
            )
        if len(set(pos)) != len(pos):
            raise InvalidArgumentError(f"position qubits {pos} are not distinct")
        enc = gray_encoding(self.n_vertices) if self.encoding is None else tuple(self.encoding)
        if len(enc) != self.n_vertices or len(set(enc)) != self.n_vertices:
            raise InvalidArgumentError("encoding must assign a distinct bitstring to every vertex")
        if any(len(code) != width or set(code) - {"0", "1"} for code in enc):
            raise InvalidArgumentError(f"encoding bitstrings must be {width}-bit binary strings")
        object.__setattr__(self, "position_qubits", pos)
        object.__setattr__(self, "encoding", enc)

    def index_of(self, vertex: int) -> int:
        """Position-register basis index of ``vertex``."""
        return int(self.encoding[vertex % self.n_vertices], 2)

    def vertex_of(self, code: str) -> int:
        return self.encoding.index(code)


@dataclass(frozen=True)
class CoinSpec:
    coin_qubit: int
    coin_operator: np.ndarray

    def __post_init__(self):
        op = np.array(self.coin_operator, dtype=np.complex128)
        if op.shape != (2, 2):
            raise InvalidArgumentError("coin operator must be 2x2")
        if not np.allclose(op.conj().T @ op, np.eye(2), atol=1e-10, rtol=0):
            raise InvalidArgumentError("coin operator is not unitary")
        op.flags.writeable = False
        object.__setattr__(self, "coin_qubit", int(self.coin_qubit))
        object.__setattr__(self, "coin_operator", op)


def _check_disjoint(walk: CycleWalk, coin: CoinSpec) -> None:
    if coin.coin_qubit in walk.position_qubits:
        raise InvalidArgumentError(
            f"coin qubit {coin.coin_qubit} overlaps position qubits {walk.position_qubits}"
        )


def build_shift(walk: CycleWalk, coin: CoinSpec) -> Gate:
    """Conditional shift as a gate on ``position_qubits + (coin_qubit,)``."""
    _check_disjoint(walk, coin)
    n = walk.n_vertices
    d = 2 * n
    s = np.zeros((d, d), dtype=np.complex128)
    for v in range(n):
        src = walk.index_of(v)
        s[2 * walk.index_of(v + 1), 2 * src] = 1.0
        s[2 * walk.index_of(v - 1) + 1, 2 * src + 1] = 1.0
    return Gate(s, walk.position_qubits + (coin.coin_qubit,), f"S[c={coin.coin_qubit}]")


def coin_gate(coin: CoinSpec) -> Gate:
    return Gate(coin.coin_operator, (coin.coin_qubit,), f"C[{coin.coin_qubit}]")


def step_gates(walk: CycleWalk, coin: CoinSpec) -> tuple[Gate, Gate]:
    """Coin flip followed by conditional shift."""
    return coin_gate(coin), build_shift(walk, coin)


def walk_step(state, walk: CycleWalk, coin: CoinSpec):
    """One walk step ``S (I x C)`` on ``state``."""
    for gate in step_gates(walk, coin):
        state = apply_gate(state, gate)
    return state


def position_distribution(state, walk: CycleWalk) -> np.ndarray:
    """Probability of each vertex, marginalizing every other qubit."""
    rho = partial_trace(state, walk.position_qubits)
    probs = np.real(np.diag(rho.elements))
    # partial_trace returns ascending qubit order; reorder to position_qubits order
    order = sorted(walk.position_qubits)
    width = len(order)
    out = np.zeros(walk.n_vertices)
    for v in range(walk.n_vertices):
        code = walk.encoding[v]
        bits = {q: code[i] for i, q in enumerate(walk.position_qubits)}
        idx = int("".join(bits[q] for q in order), 2) if width else 0
        out[v] = probs[idx]
    return out
