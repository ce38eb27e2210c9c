import numpy as np
import pytest
from hypothesis import given, settings

from conftest import amplitude_pairs, seeds
from qwtransfer.circuit import I2, X, Z, ZX, circuit_unitary
from qwtransfer.errors import InvalidArgumentError, UndefinedBranchError, ZeroProbabilityBranchError
from qwtransfer.qstate import DensityMatrix, StateVector, haar_random_state, partial_trace
from qwtransfer.tomography import state_fidelity
from qwtransfer.transfer import (
    NAMED_INPUTS,
    NMR_LAYOUT,
    THEORY_LAYOUT,
    TRANSFER_TABLE,
    ProtocolConfig,
    bob_state,
    branch_correction,
    correction_for_branch,
    correction_unitary,
    ideal_final_state,
    ideal_state_after_walk,
    initial_state,
    populated_branches,
    protocol_circuit,
    reconstruct_bob,
    reconstruct_branches,
    run_protocol_coherent,
    sample_branches,
)

S = 1 / np.sqrt(2)


def ket(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def walk_state_by_hand(a, b):
    """Four terms written out in (A_c, P1, P0, B_c) order."""
    return 0.5 * (
        np.kron(ket("000"), a * ket("1") + b * ket("0"))
        + np.kron(ket("100"), a * ket("1") - b * ket("0"))
        + np.kron(ket("011"), a * ket("0") + b * ket("1"))
        + np.kron(ket("111"), a * ket("0") - b * ket("1"))
    )


def molecule_state_by_hand(a, b):
    """Same state in (C1, C2, C3, C4) order: Bob first, then C2 C3 C4."""
    return 0.5 * (
        np.kron(a * ket("0") + b * ket("1"), ket("101"))
        + np.kron(a * ket("0") - b * ket("1"), ket("111"))
        + np.kron(a * ket("1") + b * ket("0"), ket("000"))
        + np.kron(a * ket("1") - b * ket("0"), ket("010"))
    )


class TestConfig:
    def test_normalization(self):
        with pytest.raises(InvalidArgumentError):
            ProtocolConfig(1, 1)

    def test_named_inputs_normalized(self):
        for a, b in NAMED_INPUTS.values():
            assert abs(a) ** 2 + abs(b) ** 2 == pytest.approx(1, abs=1e-15)

    def test_minus_alias_is_plus_i(self):
        assert ProtocolConfig.named("minus") == ProtocolConfig.named("plus_i")
        np.testing.assert_allclose(ProtocolConfig.named("plus_i").phi.amplitudes, [S, 1j * S])

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            ProtocolConfig.named("psi")

    def test_initial_state(self):
        cfg = ProtocolConfig(0.6, 0.8)
        np.testing.assert_allclose(initial_state(cfg).amplitudes, 0.6 * ket("0000") + 0.8 * ket("1000"))


class TestTable:
    def test_entries(self):
        table = {(t.alice_coin_bit, t.arena_bits): t.correction for t in TRANSFER_TABLE}
        assert table == {(0, "11"): "I", (1, "11"): "Z", (0, "00"): "X", (1, "00"): "ZX"}

    @pytest.mark.parametrize("alice,arena,expect", [(0, "11", I2), (1, "00", ZX), (0, "00", X), (1, "11", Z)])
    def test_lookup(self, alice, arena, expect):
        np.testing.assert_array_equal(correction_for_branch(alice, arena), expect)

    @pytest.mark.parametrize("arena", ["01", "10"])
    def test_unpopulated_arena(self, arena):
        with pytest.raises(UndefinedBranchError):
            correction_for_branch(0, arena)

    def test_zx_is_x_then_z(self):
        np.testing.assert_array_equal(ZX, Z @ X)

    def test_nmr_branches(self):
        assert populated_branches(NMR_LAYOUT) == ("000", "010", "101", "111")
        got = {b: branch_correction(b, NMR_LAYOUT).correction for b in populated_branches(NMR_LAYOUT)}
        assert got == {"000": "X", "010": "ZX", "101": "I", "111": "Z"}

    def test_theory_branches(self):
        assert populated_branches(THEORY_LAYOUT) == ("000", "011", "100", "111")


class TestIdealStates:
    @settings(max_examples=40, deadline=None)
    @given(amplitude_pairs)
    def test_walk_state_closed_form(self, ab):
        cfg = ProtocolConfig(*ab)
        np.testing.assert_allclose(ideal_state_after_walk(cfg).amplitudes, walk_state_by_hand(*ab), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(amplitude_pairs)
    def test_circuit_reproduces_walk_state(self, ab):
        for layout in (THEORY_LAYOUT, NMR_LAYOUT):
            cfg = ProtocolConfig(*ab, layout=layout)
            u = circuit_unitary(protocol_circuit(layout, "walk"))
            np.testing.assert_allclose(u @ initial_state(cfg).amplitudes,
                                       ideal_state_after_walk(cfg).amplitudes, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(amplitude_pairs)
    def test_molecule_order(self, ab):
        cfg = ProtocolConfig(*ab, layout=NMR_LAYOUT)
        np.testing.assert_allclose(ideal_state_after_walk(cfg).amplitudes, molecule_state_by_hand(*ab), atol=1e-12)

    def test_basis_input_factorizes(self):
        psi = ideal_state_after_walk(ProtocolConfig(1, 0)).amplitudes
        expect = 0.5 * (ket("0001") + ket("1001") + ket("0110") + ket("1110"))
        np.testing.assert_allclose(psi, expect, atol=1e-15)
        rest = S * (ket("001") + ket("110"))
        np.testing.assert_allclose(psi, np.kron([S, S], rest), atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(amplitude_pairs)
    def test_final_state_factorized(self, ab):
        cfg = ProtocolConfig(*ab)
        expect = np.kron(0.5 * (ket("000") + ket("100") + ket("011") + ket("111")), np.array(ab))
        np.testing.assert_allclose(ideal_final_state(cfg).amplitudes, expect, atol=1e-12)
        out = correction_unitary(THEORY_LAYOUT) @ ideal_state_after_walk(cfg).amplitudes
        np.testing.assert_allclose(out, expect, atol=1e-12)


class TestCorrectionUnitary:
    def test_identity_on_unpopulated_arena(self):
        psi = ket("0011")
        np.testing.assert_array_equal(correction_unitary() @ psi, psi)

    def test_unitary_and_involutive_on_branches(self):
        u = correction_unitary()
        np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-12)
        # every correction squares to +-I, so U^2 is diagonal with entries +-1
        sq = u @ u
        np.testing.assert_allclose(abs(np.diag(sq)), np.ones(16), atol=1e-12)
        np.testing.assert_allclose(sq - np.diag(np.diag(sq)), 0, atol=1e-12)

    def test_block_structure(self):
        u = correction_unitary()
        for t in TRANSFER_TABLE:
            prefix = f"{t.alice_coin_bit}{t.arena_bits}"
            base = int(prefix, 2) * 2
            np.testing.assert_array_equal(u[base:base + 2, base:base + 2], t.matrix)


class TestRun:
    @pytest.mark.parametrize("name", ["zero", "one", "plus", "plus_i"])
    @pytest.mark.parametrize("layout", [THEORY_LAYOUT, NMR_LAYOUT])
    def test_named_inputs_transfer(self, name, layout):
        cfg = ProtocolConfig.named(name, layout=layout)
        bob = bob_state(run_protocol_coherent(cfg), layout)
        assert state_fidelity(bob, cfg.phi) == pytest.approx(1.0, abs=1e-10)

    def test_haar_inputs(self, rng):
        for _ in range(100):
            phi = haar_random_state(1, rng)
            cfg = ProtocolConfig(*phi.amplitudes, layout=NMR_LAYOUT)
            bob = bob_state(run_protocol_coherent(cfg), NMR_LAYOUT)
            assert state_fidelity(bob, phi) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [1e-5, 0.3, 1.0])
    def test_pps_input(self, alpha):
        cfg = ProtocolConfig(0.6, 0.8j, pps_alpha=alpha)
        out = run_protocol_coherent(cfg)
        assert isinstance(out, DensityMatrix)
        expect = (1 - alpha) * I2 / 2 + alpha * cfg.phi.to_density().elements
        np.testing.assert_allclose(bob_state(out).elements, expect, atol=1e-12)

    def test_stage_names(self):
        with pytest.raises(InvalidArgumentError):
            protocol_circuit(THEORY_LAYOUT, "box")


class TestReconstruction:
    @settings(max_examples=30, deadline=None)
    @given(amplitude_pairs)
    def test_every_branch_recovers_input(self, ab):
        cfg = ProtocolConfig(*ab, layout=NMR_LAYOUT)
        rho = ideal_state_after_walk(cfg).to_density()
        results = reconstruct_branches(rho, NMR_LAYOUT)
        assert set(results) == {"000", "010", "101", "111"}
        for res in results.values():
            assert res.probability == pytest.approx(0.25, abs=1e-10)
            assert state_fidelity(res.rho, cfg.phi) == pytest.approx(1.0, abs=1e-10)
        ref = results["101"].rho.elements
        for res in results.values():
            np.testing.assert_allclose(res.rho.elements, ref, atol=1e-10)

    def test_branch_000_needs_x(self):
        a, b = 0.6, 0.8j
        cfg = ProtocolConfig(a, b, layout=NMR_LAYOUT)
        res = reconstruct_branches(ideal_state_after_walk(cfg), NMR_LAYOUT)["000"]
        sigma = np.array([b, a])
        np.testing.assert_allclose(res.sigma.elements, np.outer(sigma, sigma.conj()), atol=1e-12)
        assert res.correction == "X"

    def test_branch_101_identity(self):
        cfg = ProtocolConfig(0.6, 0.8, layout=NMR_LAYOUT)
        rho = reconstruct_bob(ideal_state_after_walk(cfg), "101", NMR_LAYOUT)
        np.testing.assert_allclose(rho.elements, cfg.phi.to_density().elements, atol=1e-12)

    def test_unpopulated_branch(self):
        cfg = ProtocolConfig(0.6, 0.8, layout=NMR_LAYOUT)
        with pytest.raises(UndefinedBranchError):
            reconstruct_bob(ideal_state_after_walk(cfg), "001", NMR_LAYOUT)

    def test_zero_probability_branch(self):
        # the maximally mixed state cannot have zero weight; a basis state can
        rho = StateVector.from_bits("0000").to_density()
        with pytest.raises(ZeroProbabilityBranchError):
            reconstruct_bob(rho, "101", NMR_LAYOUT)


class TestBiseparability:
    @pytest.mark.parametrize("name", ["zero", "one"])
    def test_basis_inputs_factor_off_alice_coin(self, name):
        cfg = ProtocolConfig.named(name)
        assert partial_trace(ideal_state_after_walk(cfg), [0]).purity() == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("name", ["plus", "plus_i"])
    def test_superpositions_entangle_alice_coin(self, name):
        cfg = ProtocolConfig.named(name)
        assert partial_trace(ideal_state_after_walk(cfg), [0]).purity() < 1 - 1e-3


class TestSampling:
    def test_seeded_and_exact(self):
        cfg = ProtocolConfig.named("plus_i", layout=NMR_LAYOUT)
        first = sample_branches(cfg, 400, seed=7)
        second = sample_branches(cfg, 400, seed=7)
        assert first["counts"] == second["counts"]
        assert sum(first["counts"].values()) == 400
        assert set(k for k, v in first["counts"].items() if v) <= {"000", "010", "101", "111"}
        assert state_fidelity(first["bob"], cfg.phi) == pytest.approx(1.0, abs=1e-10)

    def test_shots_positive(self):
        with pytest.raises(InvalidArgumentError):
            sample_branches(ProtocolConfig.named("zero"), 0, seed=0)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_counts_near_uniform(self, seed):
        counts = sample_branches(ProtocolConfig.named("plus"), 4000, seed=seed)["counts"]
        for label in ("000", "011", "100", "111"):
            assert abs(counts[label] / 4000 - 0.25) < 0.05
