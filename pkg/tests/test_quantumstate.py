import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsvqa.ansatz import build_ancilla_ansatz, build_gibbs_pqc, rp_matrix
from gibbsvqa.errors import InvalidArgumentError
from gibbsvqa.hamiltonian import PauliHamiltonian, PauliTerm, build_xy_hamiltonian, to_dense
from gibbsvqa.quantumstate import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    apply_gate,
    basis_state,
    cnot,
    density_from_state,
    entropy_of_density,
    expectation_value,
    is_unitary,
    partial_trace,
    rxy,
    ry,
    ryx,
    rz,
    sx,
)


def random_state(rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def dense_operator(gate, targets, n):
    """Reference: full 2^n matrix of ``gate`` on ``targets`` via explicit basis mapping."""
    d = 1 << n
    k = len(targets)
    op = np.zeros((d, d), dtype=complex)
    for col in range(d):
        sub = 0
        for t in targets:
            sub = 2 * sub + ((col >> t) & 1)
        for out_sub in range(1 << k):
            row = col
            for pos, t in enumerate(targets):
                bit = (out_sub >> (k - 1 - pos)) & 1
                row = (row & ~(1 << t)) | (bit << t)
            op[row, col] += gate[out_sub, sub]
    return op


class TestGates:
    def test_cnot_truth_table(self):
        # control qubit 1 holds the 1; index = 2 (binary 10)
        out = apply_gate(basis_state(2, 0b10), cnot(), (1, 0))
        assert np.allclose(out, basis_state(2, 0b11))

    def test_ry_half_rotation(self):
        out = apply_gate(basis_state(1, 0), ry(np.pi / 2), (0,))
        assert np.allclose(out, np.array([1, 1]) / np.sqrt(2))

    def test_rp_zero_is_identity(self):
        rng = np.random.default_rng(0)
        psi = random_state(rng, 2)
        assert np.allclose(apply_gate(psi, rp_matrix(0.0, 0.0), (0, 1)), psi)

    def test_conventions_match_exponentials(self):
        t = 0.37
        assert np.allclose(ry(t), scipy.linalg.expm(-1j * t * PAULI_Y / 2))
        assert np.allclose(rz(t), scipy.linalg.expm(-1j * t * PAULI_Z / 2))
        ref_sx = np.exp(1j * np.pi / 4) * scipy.linalg.expm(-1j * np.pi * PAULI_X / 4)
        assert np.allclose(sx(), ref_sx)
        assert np.allclose(sx() @ sx(), PAULI_X)

    def test_xy_rotations_exponentials(self):
        # sign chosen so that R_YX(b) R_XY(a) reproduces rp_matrix(a, b)
        t = 0.81
        assert np.allclose(rxy(t), scipy.linalg.expm(1j * t * np.kron(PAULI_X, PAULI_Y) / 2))
        assert np.allclose(ryx(t), scipy.linalg.expm(1j * t * np.kron(PAULI_Y, PAULI_X) / 2))

    @pytest.mark.parametrize("make", [
        lambda t: ry(t), lambda t: rz(t), lambda t: sx(), lambda t: cnot(),
        lambda t: rxy(t), lambda t: ryx(t), lambda t: rp_matrix(t, 1.3 * t),
    ])
    def test_unitarity(self, make):
        for t in np.linspace(-7, 7, 15):
            u = make(t)
            assert np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) <= 1e-12
            assert is_unitary(u)

    @pytest.mark.parametrize("targets", [(0,), (2,), (0, 1), (1, 0), (0, 3), (3, 1)])
    def test_matches_dense_operator(self, targets):
        rng = np.random.default_rng(len(targets) + sum(targets))
        n = 4
        k = len(targets)
        g = scipy.linalg.expm(1j * (lambda a: a + a.conj().T)(rng.normal(size=(1 << k, 1 << k))))
        psi = random_state(rng, n)
        ref = dense_operator(g, targets, n) @ psi
        assert np.allclose(apply_gate(psi, g, targets), ref, atol=1e-12)

    def test_batched_columns(self):
        rng = np.random.default_rng(3)
        batch = np.stack([random_state(rng, 3) for _ in range(5)], axis=1)
        out = apply_gate(batch, cnot(), (2, 0))
        for b in range(5):
            assert np.allclose(out[:, b], apply_gate(batch[:, b], cnot(), (2, 0)))

    def test_per_column_gate(self):
        rng = np.random.default_rng(4)
        batch = np.stack([random_state(rng, 3) for _ in range(4)], axis=1)
        angles = rng.uniform(0, 2 * np.pi, 4)
        gates = np.stack([ry(a) for a in angles], axis=2)
        out = apply_gate(batch, gates, (1,))
        for b in range(4):
            assert np.allclose(out[:, b], apply_gate(batch[:, b], ry(angles[b]), (1,)))

    @pytest.mark.parametrize("targets", [(3,), (-1,), (0, 0), (1, 5)])
    def test_bad_targets(self, targets):
        g = ry(0.1) if len(targets) == 1 else cnot()
        with pytest.raises(InvalidArgumentError):
            apply_gate(basis_state(3), g, targets)

    def test_arity_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            apply_gate(basis_state(3), cnot(), (0,))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, n, seed):
        rng = np.random.default_rng(seed)
        psi = random_state(rng, n)
        for _ in range(10):
            if n > 1 and rng.random() < 0.5:
                a, b = rng.choice(n, 2, replace=False)
                psi = apply_gate(psi, rp_matrix(*rng.uniform(0, 7, 2)), (a, b))
            else:
                psi = apply_gate(psi, ry(rng.uniform(0, 7)), (int(rng.integers(n)),))
            assert abs(np.linalg.norm(psi) - 1) <= 1e-12


class TestDensityAndTrace:
    def test_density_examples(self):
        assert np.allclose(density_from_state(basis_state(1)), np.diag([1, 0]))
        plus = np.array([1, 1]) / np.sqrt(2)
        assert np.allclose(density_from_state(plus), np.full((2, 2), 0.5))

    def test_density_random_pure(self):
        rho = density_from_state(random_state(np.random.default_rng(5), 2))
        assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
        assert np.trace(rho @ rho).real == pytest.approx(1, abs=1e-12)

    def test_density_rejects_unnormalized(self):
        with pytest.raises(InvalidArgumentError):
            density_from_state(np.array([1.0, 1.0]))

    def test_bell_pair(self):
        bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
        for keep in (0, 1):
            assert np.allclose(partial_trace(bell, [keep]), np.eye(2) / 2)

    def test_product_state(self):
        # qubit 0 in |0>, qubit 1 in |+>
        plus = np.array([1, 1]) / np.sqrt(2)
        psi = np.kron(plus, [1, 0])
        assert np.allclose(partial_trace(psi, [1]), np.full((2, 2), 0.5))
        assert np.allclose(partial_trace(psi, [0]), np.diag([1, 0]))

    def test_state_and_density_routes_agree(self):
        rng = np.random.default_rng(6)
        psi = random_state(rng, 4)
        rho = density_from_state(psi)
        for keep in ([0], [1, 3], [0, 1, 2], [2]):
            assert np.allclose(partial_trace(psi, keep), partial_trace(rho, keep), atol=1e-14)

    def test_kept_bit_order(self):
        # |q2 q1 q0> = |1 0 0>: keeping (0, 2) gives 2-qubit index 0b10
        rho = partial_trace(basis_state(3, 0b100), [0, 2])
        assert rho[2, 2] == pytest.approx(1)

    @pytest.mark.parametrize("keep", [[], [0, 1, 2]])
    def test_bad_selector(self, keep):
        with pytest.raises(InvalidArgumentError):
            partial_trace(basis_state(3), keep)

    def test_pre_tfd_state_is_diagonal(self):
        rng = np.random.default_rng(7)
        n, la = 3, 2
        theta = rng.uniform(0, 2 * np.pi, n * (la + 1))
        u_a = build_ancilla_ansatz(n, la).unitary(theta)
        circ = build_gibbs_pqc(n, la, 0)
        psi = circ.run(theta)
        expected = np.diag(np.abs(u_a[:, 0]) ** 2)
        rho_s = partial_trace(psi, range(n, 2 * n))
        rho_a = partial_trace(psi, range(n))
        assert np.max(np.abs(rho_s - expected)) <= 1e-12
        assert np.max(np.abs(rho_a - rho_s)) <= 1e-12

    def test_entropy_symmetric_for_pure_bipartite(self):
        rng = np.random.default_rng(8)
        psi = random_state(rng, 5)
        s_a = entropy_of_density(partial_trace(psi, [0, 1]))
        s_b = entropy_of_density(partial_trace(psi, [2, 3, 4]))
        assert s_a == pytest.approx(s_b, abs=1e-10)


class TestEntropyAndExpectation:
    def test_maximally_mixed(self):
        assert entropy_of_density(np.eye(4) / 4) == pytest.approx(2 * np.log(2), abs=1e-12)

    def test_pure(self):
        psi = random_state(np.random.default_rng(9), 3)
        assert entropy_of_density(density_from_state(psi)) == pytest.approx(0, abs=1e-10)

    def test_two_level(self):
        # -0.75 ln 0.75 - 0.25 ln 0.25
        assert entropy_of_density(np.diag([0.75, 0.25])) == pytest.approx(0.5623351446188083, abs=1e-12)

    def test_sigma_z(self):
        H = PauliHamiltonian(1, [PauliTerm(1.0, {0: "Z"})])
        assert expectation_value(basis_state(1), H) == pytest.approx(1)

    def test_traceless(self):
        H = build_xy_hamiltonian(3, 0.3, 0.7)
        assert expectation_value(np.eye(8) / 8, H) == pytest.approx(0, abs=1e-14)

    def test_xy_against_dense(self):
        H = build_xy_hamiltonian(2, 1.0, 0.0)
        psi = basis_state(2)
        x = np.array([[0, 1], [1, 0]])
        dense = -2 * np.kron(x, x)
        assert expectation_value(psi, H) == pytest.approx((psi.conj() @ dense @ psi).real)
        rng = np.random.default_rng(10)
        phi = random_state(rng, 2)
        rho = density_from_state(phi)
        assert expectation_value(rho, H) == pytest.approx(np.trace(dense @ rho).real, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            expectation_value(basis_state(3), build_xy_hamiltonian(2, 0.5, 0.5))

    def test_dense_consistency(self):
        rng = np.random.default_rng(11)
        H = build_xy_hamiltonian(4, 0.4, 0.2)
        psi = random_state(rng, 4)
        assert expectation_value(psi, H) == pytest.approx(
            np.vdot(psi, to_dense(H) @ psi).real, abs=1e-12)
