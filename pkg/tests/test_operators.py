"""Tests for the dense Hermitian operator layer."""

import numpy as np
import pytest

from qseclab import operators as ops
from qseclab.errors import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    ParseError,
    TraceNotOneError,
)

# the fixed conjugate-basis realization used throughout the locking work
KET = {
    1: np.array([1, 0], dtype=complex),
    2: np.array([1, 1], dtype=complex) / np.sqrt(2),
    3: np.array([0, 1], dtype=complex),
    4: np.array([1, -1], dtype=complex) / np.sqrt(2),
}
PROJ = {i: np.outer(v, v.conj()) for i, v in KET.items()}


def random_hermitian(dim, rng):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (m + m.conj().T)


def random_density(dim, rng):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    return ops.DensityOperator(rho / np.trace(rho).real)


class TestValidateDensity:
    def test_maximally_mixed_qubit_is_valid(self):
        state = ops.validate_density(np.eye(2) / 2)
        assert state.dim == 2
        assert np.trace(state.matrix).real == pytest.approx(1.0)

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(NotPositiveError) as info:
            ops.validate_density(np.diag([1.0, -0.001]))
        assert info.value.most_negative == pytest.approx(-0.001, abs=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NotHermitianError):
            ops.validate_density(np.array([[0.5, 0.5j], [0.5j, 0.5]]))

    def test_wrong_trace_rejected(self):
        with pytest.raises(TraceNotOneError):
            ops.validate_density(np.diag([0.6, 0.6]))

    def test_non_square_rejected(self):
        with pytest.raises(NotHermitianError):
            ops.validate_density(np.ones((2, 3)))


class TestEigHermitian:
    def test_pauli_z_descending(self):
        vals, _ = ops.eig_hermitian(ops.hermitian(np.diag([1.0, -1.0])))
        np.testing.assert_allclose(vals, [1.0, -1.0])

    def test_identity_dim4(self):
        vals, _ = ops.eig_hermitian(ops.hermitian(np.eye(4)))
        np.testing.assert_allclose(vals, np.ones(4))

    def test_random_dim8_reconstruction(self):
        # self-consistency oracle: rebuild the operator from its decomposition
        rng = np.random.default_rng(81)
        for _ in range(20):
            h = ops.hermitian(random_hermitian(8, rng))
            vals, vecs = ops.eig_hermitian(h)
            rebuilt = (vecs * vals) @ vecs.conj().T
            assert np.abs(rebuilt - h.matrix).max() < 1e-9
            gram = vecs.conj().T @ vecs
            assert np.abs(gram - np.eye(8)).max() < 1e-9
            assert np.all(np.diff(vals) <= 1e-12)

    def test_deterministic_for_identical_bits(self):
        rng = np.random.default_rng(3)
        h = ops.hermitian(random_hermitian(6, rng))
        first = ops.eig_hermitian(h)
        second = ops.eig_hermitian(ops.hermitian(h.matrix.copy()))
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])


class TestTraceDistance:
    def test_state_to_itself_is_zero(self):
        rho = ops.pure_state([1, 1j])
        assert ops.trace_distance(rho, rho) == 0.0

    def test_orthogonal_pure_states_at_one(self):
        assert ops.trace_distance(ops.pure_state([1, 0]), ops.pure_state([0, 1])) == pytest.approx(1.0)

    def test_locking_states_against_maximally_mixed(self):
        # each two-term mixture sits at exactly 1/2 from I/4
        terms = {
            (1, 1): ((1, 1), (3, 2)),
            (1, 0): ((1, 3), (3, 4)),
            (0, 1): ((2, 1), (4, 2)),
        }
        mixed = ops.maximally_mixed(4)
        for pair in terms.values():
            state = ops.DensityOperator(
                0.5 * (np.kron(PROJ[pair[0][0]], PROJ[pair[0][1]])
                       + np.kron(PROJ[pair[1][0]], PROJ[pair[1][1]]))
            )
            assert ops.trace_distance(state, mixed) == pytest.approx(0.5, abs=1e-10)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b, c = (random_density(4, rng) for _ in range(3))
            assert ops.trace_distance(a, b) == pytest.approx(ops.trace_distance(b, a), abs=1e-12)
            assert ops.trace_distance(a, c) <= (
                ops.trace_distance(a, b) + ops.trace_distance(b, c) + 1e-9
            )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ops.trace_distance(ops.maximally_mixed(2), ops.maximally_mixed(4))


class TestTensor:
    def test_mixed_qubits_give_mixed_two_qubit(self):
        out = ops.tensor(ops.maximally_mixed(2), ops.maximally_mixed(2))
        np.testing.assert_allclose(out.matrix, np.eye(4) / 4)

    def test_projector_tensor_is_rank_one(self):
        p1 = ops.DensityOperator(PROJ[1])
        out = ops.tensor(p1, p1)
        vals = np.linalg.eigvalsh(out.matrix)
        np.testing.assert_allclose(np.sort(vals), [0, 0, 0, 1], atol=1e-12)

    def test_trace_multiplicative(self):
        # oracle: direct multiplication of the individual traces
        rng = np.random.default_rng(12)
        for _ in range(25):
            a = ops.hermitian(random_hermitian(3, rng))
            b = ops.hermitian(random_hermitian(4, rng))
            left = np.trace(ops.tensor(a, b).matrix)
            right = np.trace(a.matrix) * np.trace(b.matrix)
            assert abs(left - right) < 1e-10

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            ops.tensor(ops.maximally_mixed(2), ops.hermitian(np.eye(2)))


class TestPartialTrace:
    def test_marginals_of_product(self):
        rng = np.random.default_rng(2)
        a = random_density(2, rng)
        b = random_density(3, rng)
        joint = ops.tensor(a, b)
        np.testing.assert_allclose(
            ops.partial_trace(joint, (2, 3), keep=0).matrix, a.matrix, atol=1e-12
        )
        np.testing.assert_allclose(
            ops.partial_trace(joint, (2, 3), keep=1).matrix, b.matrix, atol=1e-12
        )


class TestVonNeumannEntropy:
    def test_pure_state_zero(self):
        assert ops.von_neumann_entropy(ops.pure_state([1, 1])) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("dim", [2, 4, 8])
    def test_maximally_mixed(self, dim):
        assert ops.von_neumann_entropy(ops.maximally_mixed(dim)) == pytest.approx(np.log2(dim))

    def test_qubit_against_binary_entropy_formula(self):
        expected = -(0.25 * np.log2(0.25) + 0.75 * np.log2(0.75))
        got = ops.von_neumann_entropy(ops.validate_density(np.diag([0.25, 0.75])))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_concavity_spot_check(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            a, b = random_density(4, rng), random_density(4, rng)
            mix = ops.DensityOperator(0.5 * (a.matrix + b.matrix))
            lhs = ops.von_neumann_entropy(mix)
            rhs = 0.5 * ops.von_neumann_entropy(a) + 0.5 * ops.von_neumann_entropy(b)
            assert lhs >= rhs - 1e-9


class TestMeasurementContraction:
    """Induced classical distances never exceed the trace distance and the
    eigenbasis of the difference attains it."""

    def test_random_povms_contract(self):
        from qseclab import detection
        from qseclab.distributions import variational_distance

        rng = np.random.default_rng(44)
        for _ in range(20):
            rho, sigma = random_density(3, rng), random_density(3, rng)
            z = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            q, r = np.linalg.qr(z)
            q = q * (np.diag(r) / np.abs(np.diag(r)))
            frame = q[:, :3]
            povm = detection.POVM(
                tuple(np.outer(frame[y].conj(), frame[y]) for y in range(6))
            )
            p = detection.outcome_distribution(povm, rho)
            qdist = detection.outcome_distribution(povm, sigma)
            assert variational_distance(p, qdist) <= ops.trace_distance(rho, sigma) + 1e-9

    def test_difference_eigenbasis_achieves_distance(self):
        from qseclab import detection
        from qseclab.distributions import variational_distance

        rng = np.random.default_rng(45)
        for _ in range(20):
            rho, sigma = random_density(4, rng), random_density(4, rng)
            diff = ops.hermitian(rho.matrix - sigma.matrix)
            povm = detection.eigenbasis_povm(diff)
            p = detection.outcome_distribution(povm, rho)
            q = detection.outcome_distribution(povm, sigma)
            assert variational_distance(p, q) == pytest.approx(
                ops.trace_distance(rho, sigma), abs=1e-9
            )


class TestWireFormat:
    def test_round_trip(self):
        rng = np.random.default_rng(9)
        rho = random_density(3, rng)
        rebuilt = ops.matrix_from_pairs(ops.matrix_to_pairs(rho))
        np.testing.assert_allclose(rebuilt, rho.matrix, atol=0)

    def test_half_identity_literal(self):
        literal = [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]
        np.testing.assert_allclose(ops.matrix_from_pairs(literal), np.eye(2) / 2)

    def test_malformed_literal_rejected(self):
        with pytest.raises(ParseError):
            ops.matrix_from_pairs([[1, 2], [3, 4]])
