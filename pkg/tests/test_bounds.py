"""Tests for the inequality checks and campaign machinery."""

import json

import numpy as np
import pytest

from qseclab import bounds, ensembles as ens, locking, operators as ops
from qseclab.errors import OutOfScopeError, ValidationError


def orthogonal_ensemble(n_bits):
    n_keys = 2**n_bits
    states = tuple(ops.pure_state(np.eye(n_keys)[k]) for k in range(n_keys))
    return ens.CQEnsemble(n_bits, np.full(n_keys, 1 / n_keys), states)


def constant_ensemble(n_bits, dim=2):
    n_keys = 2**n_bits
    return ens.CQEnsemble(
        n_bits, np.full(n_keys, 1 / n_keys), (ops.maximally_mixed(dim),) * n_keys
    )


class TestPinskerCheck:
    def test_product_joint_passes_with_zero_margin(self):
        joint = np.outer([0.3, 0.7], [0.4, 0.6])
        result = bounds.check_pinsker(joint, (2, 2))
        assert result.verdict == "pass"
        assert result.margin == pytest.approx(0.0, abs=1e-12)

    def test_perfectly_correlated_bit(self):
        joint = np.diag([0.5, 0.5])
        result = bounds.check_pinsker(joint, (2, 2))
        assert result.verdict == "pass"
        assert result.extras["delta"] == pytest.approx(0.5)
        assert result.extras["mutual_information"] == pytest.approx(1.0)
        assert result.margin == pytest.approx(0.5)

    def test_random_campaign_all_pass(self):
        rng = np.random.default_rng(111)
        for _ in range(2_000):
            rows = int(rng.integers(2, 17))
            cols = int(rng.integers(2, 17))
            result = bounds.check_pinsker(bounds.random_joint(rows, cols, rng), (rows, cols))
            assert result.verdict == "pass"
            assert result.extras["tight_margin"] >= -1e-10


class TestQuantumPinskerCheck:
    def test_constant_ensemble_boundary(self):
        result = bounds.check_quantum_pinsker(constant_ensemble(1))
        assert result.verdict == "pass"
        assert result.margin == pytest.approx(0.0, abs=1e-10)

    def test_one_bit_orthogonal_closed_form(self):
        # both sides in closed form: d = 1/2, chi = 1
        result = bounds.check_quantum_pinsker(orthogonal_ensemble(1))
        assert result.extras["d"] == pytest.approx(0.5, abs=1e-10)
        assert result.extras["chi"] == pytest.approx(1.0, abs=1e-10)
        assert result.margin == pytest.approx(0.5, abs=1e-9)

    def test_locking_ensemble_passes(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        result = bounds.check_quantum_pinsker(le.ensemble)
        assert result.verdict == "pass"
        assert result.margin == pytest.approx(0.5, abs=1e-9)


class TestChiTwoSidedCheck:
    def test_constant_ensemble_boundary(self):
        result = bounds.check_chi_two_sided(constant_ensemble(1))
        assert result.verdict == "pass"
        assert result.extras["upper_margin"] == pytest.approx(0.0, abs=1e-9)

    def test_binary_entropy_identity_inside_bound(self):
        from qseclab.distributions import binary_entropy

        assert binary_entropy(0.5) == 1.0
        # at d = 1/4 the upper bound evaluates through h(1/2) = 1
        d = 0.25
        assert 8 * d * 1 + 2 * binary_entropy(2 * d) == pytest.approx(4.0)

    def test_upper_side_not_applicable_beyond_half(self):
        result = bounds.check_chi_two_sided(orthogonal_ensemble(2))  # d = 3/4
        assert result.extras["upper_margin"] is None
        assert "not applicable" in result.note
        assert result.verdict == "pass"

    def test_random_campaign(self):
        recipes = bounds.default_recipes(300, seed=77)
        result = bounds.run_campaign(recipes, checks=("chi_two_sided",), seed=77)
        assert result.summary["chi_two_sided"]["fail"] == 0


class TestAccessibleInfoCheck:
    def test_constant_ensemble_passes(self):
        main, companion = bounds.check_accessible_info(constant_ensemble(1))
        assert main.verdict == "pass"
        assert companion.verdict == "pass"

    def test_orthogonal_ensemble_trivially_passes(self):
        main, _ = bounds.check_accessible_info(orthogonal_ensemble(2))
        assert main.verdict == "pass"
        assert main.extras["i_ac_lower"] == pytest.approx(2.0, abs=1e-8)

    def test_locking_ensemble_recorded_with_budget(self):
        le = locking.build_locking_ensemble("symmetric_corrected")
        main, companion = bounds.check_accessible_info(le.ensemble, restarts=1, seed=3)
        assert main.verdict == "pass"
        assert "restarts=1" in main.note
        assert companion.verdict == "pass"

    def test_verdicts_never_fail(self):
        recipes = bounds.default_recipes(60, seed=19)
        result = bounds.run_campaign(recipes, checks=("accessible_info",), seed=19)
        counts = result.summary["accessible_info"]
        assert counts["fail"] == 0
        assert counts["pass"] + counts["inconclusive"] == 60


class TestExponentRelationCheck:
    def test_upper_boundary(self):
        result = bounds.check_exponent_relation(2.0**-4, 2.0**-8, 16)
        assert result.verdict == "pass"
        assert result.extras["upper_margin"] == pytest.approx(0.0, abs=1e-12)

    def test_lower_boundary(self):
        result = bounds.check_exponent_relation(2.0**-10, 2.0**-2, 16)
        assert result.verdict == "pass"
        assert result.extras["lower_margin"] == pytest.approx(0.0, abs=1e-12)

    def test_out_of_scope_chi_above_one(self):
        with pytest.raises(OutOfScopeError):
            bounds.check_exponent_relation(0.5, 1.5, 4)

    def test_out_of_scope_small_key(self):
        with pytest.raises(OutOfScopeError):
            bounds.check_exponent_relation(2.0**-6, 2.0**-3, 2)

    def test_harvested_from_campaign(self):
        recipes = bounds.default_recipes(200, seed=23)
        result = bounds.run_campaign(
            recipes, checks=("quantum_pinsker", "exponent_relation"), seed=23
        )
        assert result.summary["exponent_relation"]["fail"] == 0
        assert result.summary["quantum_pinsker"]["fail"] == 0


class TestRecipesAndCampaigns:
    def test_recipe_determinism(self):
        recipe = bounds.EnsembleRecipe("random_mixed", 2, 4, seed=99)
        a = bounds.build_instance(recipe)
        b = bounds.build_instance(recipe)
        np.testing.assert_array_equal(a.prior, b.prior)
        for s, t in zip(a.states, b.states):
            np.testing.assert_array_equal(s.matrix, t.matrix)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            bounds.EnsembleRecipe("mystery", 1, 2, 0)

    def test_every_kind_builds(self):
        for i, kind in enumerate(bounds.RECIPE_KINDS):
            recipe = bounds.EnsembleRecipe(kind, 2, 4, seed=i)
            e = bounds.build_instance(recipe)
            assert e.num_keys == 4

    def test_empty_campaign(self):
        result = bounds.run_campaign(())
        assert result.reports == ()
        assert result.summary == {}
        assert result.hard_failures == 0

    def test_campaign_deterministic(self):
        recipes = bounds.default_recipes(40, seed=5)
        first = bounds.run_campaign(recipes, seed=5)
        second = bounds.run_campaign(recipes, seed=5)
        flat_first = [json.dumps(r.to_flat_dict(), sort_keys=True) for r in first.reports]
        flat_second = [json.dumps(r.to_flat_dict(), sort_keys=True) for r in second.reports]
        assert flat_first == flat_second

    def test_default_campaign_zero_hard_failures(self):
        recipes = bounds.default_recipes(300, seed=1)
        result = bounds.run_campaign(recipes, seed=1)
        assert result.hard_failures == 0
        assert result.summary["pinsker"]["fail"] == 0
        assert result.summary["quantum_pinsker"]["fail"] == 0
        assert result.summary["chi_two_sided"]["fail"] == 0

    def test_worst_margins_monotone_under_prefix_growth(self):
        small = bounds.run_campaign(bounds.default_recipes(40, seed=9), seed=9)
        large = bounds.run_campaign(bounds.default_recipes(120, seed=9), seed=9)
        for name, entry in small.summary.items():
            if entry["worst_margin"] is None:
                continue
            assert large.summary[name]["worst_margin"] <= entry["worst_margin"] + 1e-15

    def test_flat_dict_shape(self):
        recipes = bounds.default_recipes(3, seed=2)
        result = bounds.run_campaign(recipes, seed=2)
        row = result.reports[0].to_flat_dict()
        for key in ("instance_id", "kind", "n_bits", "dim", "seed", "d", "chi"):
            assert key in row
        assert row["instance_id"] == 0
