import json
import math

import numpy as np
import pytest

from psfair.metrics import auroc
from psfair.positive_sum import Classification, compare, decompose_disparity_change
from psfair.synth import (
    CandidateSpec,
    GroupRecipe,
    ScenarioSpec,
    build_study,
    gen_binormal,
    load_scenario,
    mu_for_auc,
    oracle_auroc,
    preset,
    scenario_to_dict,
)


class TestOracle:
    def test_pair_count_example(self):
        assert oracle_auroc([0.9, 0.4], [0.8, 0.2]) == 0.75

    def test_single_tied_pair(self):
        assert oracle_auroc([0.5], [0.5]) == 0.5

    def test_single_ordered_pair(self):
        assert oracle_auroc([1.0], [0.0]) == 1.0

    def test_size_guard(self):
        with pytest.raises(ValueError, match="oracle limited"):
            oracle_auroc([0.0] * 6000, [1.0] * 6000)

    def test_empty_side(self):
        with pytest.raises(ValueError):
            oracle_auroc([], [1.0])


class TestBinormal:
    def test_mu_at_half_is_zero(self):
        assert mu_for_auc(0.5) == 0.0

    def test_mu_rejects_out_of_range(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                mu_for_auc(bad)

    def test_determinism(self):
        recipe = GroupRecipe("g", 50, 50, 0.8)
        assert gen_binormal(recipe, 7) == gen_binormal(recipe, 7)
        assert gen_binormal(recipe, 7) != gen_binormal(recipe, 8)

    def test_large_sample_hits_target(self):
        recipe = GroupRecipe("g", 100_000, 100_000, 0.8)
        records = gen_binormal(recipe, 1)
        pos = [r.score for r in records if r.label == 1]
        neg = [r.score for r in records if r.label == 0]
        assert abs(auroc(pos, neg) - 0.8) < 0.01

    def test_analytic_auc_formula(self):
        # AUC of the binormal model is Phi(mu / sqrt(2)); invert and check
        from scipy.stats import norm

        for target in (0.55, 0.7, 0.9):
            mu = mu_for_auc(target)
            assert norm.cdf(mu / math.sqrt(2)) == pytest.approx(target, abs=1e-12)


class TestBuildStudy:
    def _spec(self, overrides, seed=3):
        return ScenarioSpec(
            name="t",
            baseline_recipes=(
                GroupRecipe("a", 50, 50, 0.7),
                GroupRecipe("b", 50, 50, 0.75),
            ),
            candidates=(CandidateSpec("cand", overrides),),
            seed=seed,
            finding="f",
        )

    def test_no_override_candidate_identical(self):
        study = build_study(self._spec({}))
        base_scores = {(r.example_id): r.score for r in study.baseline.records}
        for r in study.candidates[0].records:
            assert r.score == base_scores[r.example_id]
        cmp = compare(study, "f", "cand")
        assert cmp.overall_delta == 0.0
        assert cmp.min_group_delta == 0.0

    def test_override_perturbs_only_that_group(self):
        study = build_study(self._spec({"a": 0.85}))
        base = {r.example_id: r.score for r in study.baseline.records}
        for r in study.candidates[0].records:
            if r.group_id == "b" or r.label == 0:
                assert r.score == base[r.example_id]
            else:
                assert r.score != base[r.example_id]

    def test_unknown_override_group(self):
        with pytest.raises(ValueError, match="unknown group"):
            self._spec({"zz": 0.8})

    def test_determinism(self):
        a = build_study(self._spec({"a": 0.8}))
        b = build_study(self._spec({"a": 0.8}))
        assert a.baseline == b.baseline
        assert a.candidates[0] == b.candidates[0]


class TestPresets:
    def test_m2_like_non_harmful_widening(self):
        study = build_study(preset("m2_like", seed=0))
        cmp = compare(study, "lung_lesion", "m2")
        assert cmp.classification is Classification.NON_HARMFUL
        assert cmp.disparity_change > 0
        assert decompose_disparity_change(cmp).kind.value == "all_improved_unevenly"

    def test_m4_like_harmful_narrowing(self):
        study = build_study(preset("m4_like", seed=0))
        cmp = compare(study, "lung_lesion", "m4")
        assert cmp.classification is Classification.HARMFUL_TO_SUBGROUP
        assert cmp.disparity_change < 0
        assert cmp.min_group == "group_c"

    def test_m3_like_negative_x(self):
        study = build_study(preset("m3_like", seed=0))
        cmp = compare(study, "lung_lesion", "m3")
        assert cmp.overall_delta < 0
        assert cmp.min_group_delta < 0

    def test_no_change_preset(self):
        study = build_study(preset("no_change", seed=0))
        cmp = compare(study, "lung_lesion", "m_same")
        assert (cmp.overall_delta, cmp.min_group_delta) == (0.0, 0.0)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            preset("m9_like")


class TestScenarioFile:
    def test_roundtrip(self, tmp_path):
        spec = preset("m2_like", seed=11)
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario_to_dict(spec)))
        loaded = load_scenario(path)
        assert loaded == spec

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "x"}))
        with pytest.raises(ValueError, match="invalid scenario file"):
            load_scenario(path)
