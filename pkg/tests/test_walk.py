import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import amplitude_pairs
from qwtransfer.circuit import H, I2, X, Gate, apply_gate, embed
from qwtransfer.errors import InvalidArgumentError, UnsupportedEncodingError
from qwtransfer.qstate import StateVector
from qwtransfer.walk import (
    CoinSpec,
    CycleWalk,
    build_shift,
    gray_encoding,
    position_distribution,
    step_gates,
    walk_step,
)

S = 1 / np.sqrt(2)


def ket(bits, amp=1.0):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = amp
    return v


def test_gray_default():
    assert gray_encoding(4) == ("00", "01", "11", "10")
    assert CycleWalk(4, (0, 1)).encoding == ("00", "01", "11", "10")


@pytest.mark.parametrize("n", [3, 6, 1])
def test_non_power_of_two(n):
    with pytest.raises(UnsupportedEncodingError):
        CycleWalk(n, (0, 1))


def test_coin_spec_must_be_unitary():
    with pytest.raises(InvalidArgumentError):
        CoinSpec(0, [[1, 1], [0, 1]])


def test_encoding_must_be_bijective():
    with pytest.raises(InvalidArgumentError):
        CycleWalk(4, (0, 1), encoding=("00", "00", "11", "10"))


class TestShift:
    walk = CycleWalk(4, (0, 1))
    coin = CoinSpec(2, I2)

    def _shift(self, bits):
        s = build_shift(self.walk, self.coin)
        return embed(s, 3) @ ket(bits)

    def test_forward_on_coin_zero(self):
        np.testing.assert_array_equal(self._shift("000"), ket("010"))

    def test_backward_on_coin_one(self):
        np.testing.assert_array_equal(self._shift("011"), ket("001"))

    def test_order_four(self):
        s = build_shift(self.walk, self.coin).matrix
        np.testing.assert_array_equal(np.linalg.matrix_power(s, 4), np.eye(8))

    def test_is_permutation(self):
        s = build_shift(self.walk, self.coin).matrix
        assert set(np.unique(s)) <= {0, 1}
        np.testing.assert_array_equal(s.sum(axis=0), np.ones(8))
        np.testing.assert_array_equal(s.sum(axis=1), np.ones(8))

    def test_coin_overlap(self):
        with pytest.raises(InvalidArgumentError):
            build_shift(self.walk, CoinSpec(1, I2))
        with pytest.raises(InvalidArgumentError):
            walk_step(StateVector.from_bits("000"), self.walk, CoinSpec(0, I2))

    @pytest.mark.parametrize("v", range(4))
    def test_single_bit_flip_per_step(self, v):
        walk = self.walk
        for nxt in (v + 1, v - 1):
            a, b = walk.encoding[v], walk.encoding[nxt % 4]
            assert sum(x != y for x, y in zip(a, b)) == 1

    @pytest.mark.parametrize("n", [2, 8])
    def test_other_cycle_sizes(self, n):
        width = int(np.log2(n))
        walk = CycleWalk(n, tuple(range(width)))
        s = build_shift(walk, CoinSpec(width, I2)).matrix
        np.testing.assert_array_equal(np.linalg.matrix_power(s, n), np.eye(2 * n))


class TestWalkStep:
    # canonical order (A_c, P1, P0, B_c)
    walk = CycleWalk(4, (1, 2))

    @settings(max_examples=30, deadline=None)
    @given(amplitude_pairs)
    def test_first_step(self, ab):
        a, b = ab
        psi = StateVector(a * ket("0000") + b * ket("1000"))
        out = walk_step(psi, self.walk, CoinSpec(0, I2))
        np.testing.assert_allclose(out.amplitudes, a * ket("0010") + b * ket("1100"), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(amplitude_pairs)
    def test_two_steps(self, ab):
        a, b = ab
        psi = StateVector(a * ket("0000") + b * ket("1000"))
        psi = walk_step(psi, self.walk, CoinSpec(0, I2))
        psi = walk_step(psi, self.walk, CoinSpec(3, H))
        expect = S * (a * ket("0001") + b * ket("1000") + a * ket("0110") + b * ket("1111"))
        np.testing.assert_allclose(psi.amplitudes, expect, atol=1e-12)

    @pytest.mark.parametrize("v", range(4))
    @pytest.mark.parametrize("c", [0, 1])
    def test_classical_limit(self, v, c):
        walk = CycleWalk(4, (0, 1))
        psi = StateVector(ket(walk.encoding[v] + str(c)))
        out = walk_step(psi, walk, CoinSpec(2, I2))
        dist = position_distribution(out, walk)
        expect = np.zeros(4)
        expect[(v + 1 - 2 * c) % 4] = 1
        np.testing.assert_allclose(dist, expect, atol=1e-12)

    @pytest.mark.parametrize("v", range(4))
    @pytest.mark.parametrize("c", [0, 1])
    def test_x_coin_returns_walker(self, v, c):
        walk = CycleWalk(4, (0, 1))
        psi = StateVector(ket(walk.encoding[v] + str(c)))
        psi = walk_step(psi, walk, CoinSpec(2, I2))
        psi = walk_step(psi, walk, CoinSpec(2, X))
        np.testing.assert_allclose(position_distribution(psi, walk)[v], 1.0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, seed):
        g = np.random.default_rng(seed)
        v = g.normal(size=16) + 1j * g.normal(size=16)
        psi = StateVector(v / np.linalg.norm(v))
        out = walk_step(psi, self.walk, CoinSpec(3, H))
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_step_gate_order(self):
        coin, shift = step_gates(self.walk, CoinSpec(3, H))
        assert coin.targets == (3,) and shift.targets == (1, 2, 3)
        psi = StateVector.from_bits("0000")
        manual = apply_gate(apply_gate(psi, coin), shift)
        np.testing.assert_allclose(walk_step(psi, self.walk, CoinSpec(3, H)).amplitudes, manual.amplitudes)
