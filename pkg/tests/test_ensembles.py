"""Tests for classical-quantum ensembles and the secrecy criteria."""

import numpy as np
import pytest
import scipy.linalg

from qseclab import bounds, detection, distributions as dist, ensembles as ens, locking
from qseclab import operators as ops
from qseclab.errors import (
    DimensionCapError,
    EmptySubsetError,
    ParseError,
    ValidationError,
)


def random_ensemble(n_bits, dim, rng, uniform=True):
    n_keys = 2**n_bits
    states = tuple(bounds.random_mixed_state(dim, rng) for _ in range(n_keys))
    if uniform:
        prior = np.full(n_keys, 1.0 / n_keys)
    else:
        prior = rng.exponential(size=n_keys) + 1e-3
        prior /= prior.sum()
    return ens.CQEnsemble(n_bits, prior, states)


def orthogonal_ensemble(n_bits):
    n_keys = 2**n_bits
    states = tuple(ops.pure_state(np.eye(n_keys)[k]) for k in range(n_keys))
    return ens.CQEnsemble(n_bits, np.full(n_keys, 1 / n_keys), states)


def constant_ensemble(n_bits, dim=4):
    state = ops.maximally_mixed(dim)
    n_keys = 2**n_bits
    return ens.CQEnsemble(n_bits, np.full(n_keys, 1 / n_keys), (state,) * n_keys)


class TestConstruction:
    def test_prior_size_must_match(self):
        with pytest.raises(ValidationError):
            ens.CQEnsemble(2, [0.5, 0.5], (ops.maximally_mixed(2),) * 4)

    def test_state_count_must_match(self):
        with pytest.raises(ValidationError):
            ens.CQEnsemble(1, [0.5, 0.5], (ops.maximally_mixed(2),) * 3)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValidationError):
            ens.CQEnsemble(1, [0.5, 0.5], (ops.maximally_mixed(2), ops.maximally_mixed(4)))

    def test_key_labels_msb_first(self):
        e = constant_ensemble(2)
        assert [e.key_label(k) for k in range(4)] == ["00", "01", "10", "11"]


class TestAverageState:
    def test_constant_ensemble(self):
        e = constant_ensemble(2)
        np.testing.assert_allclose(ens.average_state(e).matrix, np.eye(4) / 4, atol=1e-14)

    def test_two_orthogonal_pure_states(self):
        e = orthogonal_ensemble(1)
        np.testing.assert_allclose(ens.average_state(e).matrix, np.diag([0.5, 0.5]), atol=1e-14)

    def test_locking_as_printed_average_is_not_mixed(self):
        le = locking.build_locking_ensemble("as_printed")
        avg = ens.average_state(le.ensemble)
        assert ops.trace_distance(avg, ops.maximally_mixed(4)) > 1e-3


class TestJointProductDistance:
    def test_constant_ensemble_is_zero(self):
        assert ens.joint_product_distance(constant_ensemble(1)) == pytest.approx(0.0, abs=1e-12)

    def test_one_bit_orthogonal_value(self):
        # oracle: direct 4x4 eigendecomposition written out here
        e = orthogonal_ensemble(1)
        joint = np.zeros((4, 4), dtype=complex)
        joint[0, 0] = 0.5
        joint[3, 3] = 0.5
        product = np.kron(np.diag([0.5, 0.5]), np.diag([0.5, 0.5]))
        expected = 0.5 * np.abs(np.linalg.eigvalsh(joint - product)).sum()
        assert expected == pytest.approx(0.5)
        assert ens.joint_product_distance(e) == pytest.approx(expected, abs=1e-12)

    def test_matches_decomposed_form_on_locking(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        assert ens.joint_product_distance(le.ensemble) == pytest.approx(
            ens.mean_conditional_distance(le.ensemble), abs=1e-9
        )

    def test_dimension_cap(self):
        rng = np.random.default_rng(0)
        e = random_ensemble(3, 16, rng)  # 8 * 16 = 128 > 64
        with pytest.raises(DimensionCapError):
            ens.joint_product_distance(e)

    def test_forms_agree_random_priors(self):
        rng = np.random.default_rng(61)
        for uniform in (True, False):
            for _ in range(20):
                e = random_ensemble(2, 4, rng, uniform=uniform)
                assert ens.joint_product_distance(e) == pytest.approx(
                    ens.mean_conditional_distance(e), abs=1e-9
                )


class TestWeightedConditionalDistance:
    def test_uniform_constant_is_zero(self):
        assert ens.weighted_conditional_distance(constant_ensemble(1)) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_coincides_with_mean_form_for_uniform_prior(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            e = random_ensemble(2, 3, rng, uniform=True)
            assert ens.weighted_conditional_distance(e) == pytest.approx(
                ens.mean_conditional_distance(e), abs=1e-9
            )

    def test_point_mass_prior_positive(self):
        # oracle: direct evaluation of each trace norm with numpy
        states = (ops.pure_state([1, 0]), ops.pure_state([0, 1]))
        e = ens.CQEnsemble(1, [1.0, 0.0], states)
        avg = states[0].matrix
        expected = 0.0
        for w, s in zip(e.prior, e.states):
            expected += 0.5 * np.abs(
                np.linalg.eigvalsh(w * s.matrix - avg / 2)
            ).sum()
        got = ens.weighted_conditional_distance(e)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got > 0.0
        assert got == pytest.approx(1 - 1 / 2, abs=1e-12)


class TestHolevoInformation:
    def test_constant_ensemble_zero(self):
        assert ens.holevo_information(constant_ensemble(2)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n_bits", [1, 2, 3])
    def test_orthogonal_pure_states(self, n_bits):
        assert ens.holevo_information(orthogonal_ensemble(n_bits)) == pytest.approx(
            n_bits, abs=1e-10
        )

    def test_locking_value_with_independent_entropy_path(self):
        # second entropy evaluation routed through scipy's eigensolver
        le = locking.build_locking_ensemble("symmetric_corrected")
        e = le.ensemble

        def entropy(matrix):
            vals = np.clip(scipy.linalg.eigh(matrix, eigvals_only=True), 0, 1)
            vals = vals[vals > 0]
            return float(-(vals * np.log2(vals)).sum())

        expected = entropy(ens.average_state(e).matrix) - sum(
            w * entropy(s.matrix) for w, s in zip(e.prior, e.states)
        )
        got = ens.holevo_information(e)
        assert got == pytest.approx(expected, abs=1e-10)
        assert 0.0 <= got <= 2.0

    def test_bounded_by_key_length_uniform_prior(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            e = random_ensemble(2, 4, rng)
            chi = ens.holevo_information(e)
            assert -1e-12 <= chi <= 2.0 + 1e-9


class TestMeasuredCriteria:
    def test_trivial_povm(self):
        e = constant_ensemble(2)
        povm = detection.POVM((np.eye(4),))
        measured = ens.measured_criteria(e, povm)
        assert measured.delta_e == pytest.approx(0.0, abs=1e-12)
        assert measured.i_e_deficit == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(measured.cpd_table[0], e.prior, atol=1e-12)

    def test_eigenbasis_on_orthogonal_states_gives_point_cpds(self):
        e = orthogonal_ensemble(1)
        povm = detection.POVM((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
        measured = ens.measured_criteria(e, povm)
        np.testing.assert_allclose(measured.cpd_table, np.eye(2), atol=1e-12)
        assert measured.i_e_deficit == pytest.approx(1.0, abs=1e-10)

    def test_contraction_under_random_povms(self):
        # contraction oracle from the operator layer
        rng = np.random.default_rng(83)
        for _ in range(15):
            e = random_ensemble(1, 3, rng, uniform=rng.random() < 0.5)
            z = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
            q, r = np.linalg.qr(z)
            q = q * (np.diag(r) / np.abs(np.diag(r)))
            frame = q[:, :3]
            povm = detection.POVM(tuple(np.outer(frame[y].conj(), frame[y]) for y in range(9)))
            measured = ens.measured_criteria(e, povm)
            assert measured.delta_e <= ens.mean_conditional_distance(e) + 1e-9

    def test_per_key_contraction(self):
        # v(p(.|k), p(.)) <= 2 * (half trace norm per key) for every key
        rng = np.random.default_rng(89)
        e = random_ensemble(2, 4, rng)
        povm = detection.eigenbasis_povm(ens.average_state(e))
        table = ens.measurement_table(e, povm)
        marginal = e.prior @ table
        distances = ens.conditional_distances(e)
        for k in range(e.num_keys):
            v = dist.variational_distance(table[k], marginal)
            assert v <= 2.0 * distances[k] + 1e-9


class TestSemanticSecurityGap:
    def test_uniform_cpd_no_gap(self):
        cpd = np.full(16, 1 / 16)
        max_gap, avg_gap = ens.semantic_security_gap(cpd, (0, 2))
        assert max_gap == pytest.approx(0.0, abs=1e-12)
        assert avg_gap == pytest.approx(0.0, abs=1e-12)

    def test_point_mass_single_bit(self):
        cpd = np.zeros(4)
        cpd[0] = 1.0
        max_gap, _ = ens.semantic_security_gap(cpd, (0,))
        assert max_gap == pytest.approx(0.5)

    def test_against_brute_force_marginalization(self):
        # oracle: explicit dictionary marginalization over all 16 keys
        rng = np.random.default_rng(927)
        for _ in range(20):
            cpd = rng.exponential(size=16)
            cpd /= cpd.sum()
            positions = tuple(sorted(rng.choice(4, size=int(rng.integers(1, 4)), replace=False)))
            marginal = {}
            for key in range(16):
                bits = format(key, "04b")
                value = "".join(bits[b] for b in positions)
                marginal[value] = marginal.get(value, 0.0) + cpd[key]
            uniform = 2.0 ** -len(positions)
            gaps = [abs(v - uniform) for v in marginal.values()]
            # include subset values with zero mass
            missing = 2 ** len(positions) - len(marginal)
            gaps.extend([uniform] * missing)
            max_gap, avg_gap = ens.semantic_security_gap(cpd, positions)
            assert max_gap == pytest.approx(max(gaps), abs=1e-12)
            assert avg_gap == pytest.approx(float(np.mean(gaps)), abs=1e-12)

    def test_full_mask_dominates_top_mass_gap(self):
        rng = np.random.default_rng(31)
        cpd = rng.exponential(size=8)
        cpd /= cpd.sum()
        max_gap, _ = ens.semantic_security_gap(cpd, (0, 1, 2))
        assert max_gap >= abs(cpd.max() - 1 / 8) - 1e-12

    def test_empty_subset_rejected(self):
        with pytest.raises(EmptySubsetError):
            ens.semantic_security_gap(np.full(4, 0.25), ())


class TestCriteriaRecord:
    def test_field_values_and_notes(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        record = ens.criteria_record(le.ensemble)
        assert record.d == pytest.approx(0.5, abs=1e-10)
        assert record.d_joint == pytest.approx(record.d, abs=1e-9)
        assert record.d_prime == pytest.approx(record.d, abs=1e-9)
        assert record.chi == pytest.approx(1.0, abs=1e-9)
        assert record.delta_e <= record.d + 1e-9
        assert "square-root measurement" in record.p1_bound_notes
        assert "factor-2" in record.p1_bound_notes

    def test_joint_form_omitted_beyond_cap(self):
        rng = np.random.default_rng(3)
        e = random_ensemble(3, 16, rng)
        record = ens.criteria_record(e)
        assert record.d_joint is None

    def test_dict_field_names(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        record = ens.criteria_record(le.ensemble)
        assert set(record.to_dict()) == {
            "d", "d_joint", "d_prime", "chi", "delta_e", "i_e_deficit", "p1_bound_notes",
        }


class TestEnsembleFiles:
    def test_round_trip(self, tmp_path):
        le = locking.build_locking_ensemble("symmetric_corrected")
        path = tmp_path / "ensemble.json"
        ens.save_ensemble(le.ensemble, path)
        loaded = ens.load_ensemble(path)
        assert loaded.n_bits == 2
        for a, b in zip(loaded.states, le.ensemble.states):
            np.testing.assert_allclose(a.matrix, b.matrix, atol=0)

    def test_bad_trace_names_state_index(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        record = ens.ensemble_to_dict(le.ensemble)
        record["states"][2] = ops.matrix_to_pairs(np.diag([0.45, 0.45, 0.0, 0.0]))
        with pytest.raises(ValidationError, match="state 2"):
            ens.ensemble_from_dict(record)

    def test_missing_field_rejected(self):
        with pytest.raises(ParseError):
            ens.ensemble_from_dict({"n": 1, "prior": [0.5, 0.5]})
