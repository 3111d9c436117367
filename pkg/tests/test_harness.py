import json

import pytest

from hazcom import (
    ConfigurationError,
    Criticality,
    EngineConfig,
    HazardCategory,
    LocationBaselineBackend,
    MixConfig,
    ObjectBaselineBackend,
    Scenario,
    ScriptedBackend,
    ValidationError,
    builtin_rule_table,
    builtin_suite,
    generate,
    load_scenarios,
    recipients_for,
    run_suite,
    save_scenarios,
    scripted_assess,
    sixty_run_suite,
)
from hazcom.harness import run_scenario, truth_from_rules


class TestBuiltinSuite:
    def test_canonical_truths(self):
        suite = {s.scenario_id: s for s in builtin_suite()}
        knife_unsafe = suite["S1-knife-unsafe-area"].ground_truth[1]
        assert knife_unsafe.category is HazardCategory.SHARP_OBJECT
        assert knife_unsafe.criticality is Criticality.HIGH
        kitchen = suite["S2-knife-kitchen"].ground_truth[0]
        assert kitchen.criticality is Criticality.LOW
        trash = suite["S5-trash-cleaning"].ground_truth[0]
        assert trash.category is HazardCategory.WASTE
        assert trash.criticality is Criticality.LOW

    def test_truths_match_the_rule_table(self):
        # The hand-written canonical truths and the table must agree.
        for scenario in builtin_suite():
            for obs, truth in zip(scenario.observations, scenario.ground_truth):
                derived = truth_from_rules(obs)
                if truth is None:
                    assert derived is None
                else:
                    assert derived is not None
                    assert derived.category is truth.category
                    assert derived.criticality is truth.criticality
                    assert derived.level is truth.level
                    assert derived.time_sensitivity is truth.time_sensitivity
                    assert derived.feasibility is truth.feasibility

    def test_coverage_of_grades_channels_alarms_and_fallback(self):
        suite = builtin_suite()
        grades = {
            t.criticality
            for s in suite for t in s.ground_truth if t is not None
        }
        assert grades == {Criticality.LOW, Criticality.MEDIUM, Criticality.HIGH}
        assert any(s.fault_profile is not None for s in suite)
        assert any(t is None for s in suite for t in s.ground_truth)

        report = run_suite(suite, {"scripted": ScriptedBackend()})
        result = report.results["scripted"]
        seen_recipient_sets = set()
        seen_alarms = set()
        fallbacks = 0
        for run in result.runs.values():
            fallbacks += run.fallback_steps
            for record in run.trace:
                if record.criticality is not None:
                    seen_recipient_sets.add(frozenset(record.recipients))
                    seen_alarms.add(record.alarm)
                else:
                    seen_alarms.add(record.alarm)
        assert seen_recipient_sets == {
            frozenset(recipients_for(k)) for k in Criticality
        }
        assert seen_alarms == {True, False}
        assert fallbacks > 0

    def test_scenario_alignment_validated(self):
        with pytest.raises(ValidationError, match="truth entries"):
            Scenario("bad", builtin_suite()[0].observations, (None,))


class TestSixtyRunSuite:
    def test_sixty_runs(self):
        suite = sixty_run_suite()
        assert len(suite) == 60
        assert len({s.scenario_id for s in suite}) == 60

    def test_truths_are_table_derived(self):
        table = builtin_rule_table()
        for scenario in sixty_run_suite():
            for obs, truth in zip(scenario.observations, scenario.ground_truth):
                assessment = scripted_assess(table, obs)
                if truth is None:
                    assert assessment is None
                else:
                    assert assessment.category is truth.category

    def test_contains_ambiguity_cases(self):
        suite = sixty_run_suite()
        occluded = [
            s for s in suite
            if any(
                e.attribute == "posture-occluded"
                for o in s.observations for e in o.salient_entities
            )
        ]
        assert occluded
        assert all(t is None for s in occluded for t in s.ground_truth)

    def test_accuracy_gap_at_least_ten_points(self):
        report = run_suite(
            sixty_run_suite(),
            {"scripted": ScriptedBackend(), "object-baseline": ObjectBaselineBackend()},
        )
        scripted = report.results["scripted"].sub_metrics.eps_det
        baseline = report.results["object-baseline"].sub_metrics.eps_det
        assert scripted - baseline >= 0.10


class TestScenarioFiles:
    def test_round_trip_builtin(self, tmp_path):
        path = tmp_path / "suite.json"
        suite = builtin_suite()
        save_scenarios(path, suite)
        assert load_scenarios(path) == suite

    def test_round_trip_sixty_and_generated(self, tmp_path):
        path = tmp_path / "suite.json"
        suite = sixty_run_suite() + generate(5, 10)
        save_scenarios(path, suite)
        assert load_scenarios(path) == suite

    def test_score_out_of_range_is_a_parse_error(self, tmp_path):
        path = tmp_path / "suite.json"
        suite = builtin_suite()
        save_scenarios(path, suite)
        document = json.loads(path.read_text())
        document["scenarios"][0]["steps"][1]["truth"]["rho"] = 11.0
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigurationError, match="range"):
            load_scenarios(path)

    def test_level_grade_incoherence_is_named(self, tmp_path):
        path = tmp_path / "suite.json"
        save_scenarios(path, builtin_suite())
        document = json.loads(path.read_text())
        step = document["scenarios"][0]["steps"][1]
        step["truth"]["d"] = "Low"          # k stays High
        del step["truth"]["rho"]
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigurationError, match="incoherent"):
            load_scenarios(path)

    def test_json_syntax_error_carries_line_number(self, tmp_path):
        path = tmp_path / "suite.json"
        path.write_text('{\n  "format": "hazcom-scenarios-v1",\n  broken\n}')
        with pytest.raises(ConfigurationError, match="suite.json:3"):
            load_scenarios(path)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "suite.json"
        path.write_text(json.dumps({"format": "other", "scenarios": []}))
        with pytest.raises(ConfigurationError, match="hazcom-scenarios-v1"):
            load_scenarios(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "suite.json"
        suite = builtin_suite()
        save_scenarios(path, suite)
        document = json.loads(path.read_text())
        document["scenarios"].append(document["scenarios"][0])
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigurationError, match="duplicate"):
            load_scenarios(path)


class TestGenerate:
    def test_same_seed_same_suite(self):
        assert generate(11, 20) == generate(11, 20)

    def test_different_seed_differs(self):
        assert generate(11, 20) != generate(12, 20)

    def test_default_mix_covers_every_category(self):
        suite = generate(0, 60)
        seen = {
            t.category
            for s in suite for t in s.ground_truth if t is not None
        }
        assert seen == set(HazardCategory)

    def test_zero_hazard_mix_is_all_absent(self):
        suite = generate(3, 10, MixConfig(hazard_fraction=0.0))
        assert all(t is None for s in suite for t in s.ground_truth)

    def test_invalid_mix_rejected(self):
        with pytest.raises(ValidationError):
            MixConfig(hazard_fraction=1.5)
        with pytest.raises(ValidationError):
            MixConfig(category_weights={c: 0.0 for c in HazardCategory})
        with pytest.raises(ValidationError):
            generate(0, 0)

    def test_truths_band_coherent(self):
        for scenario in generate(9, 30):
            for truth in scenario.ground_truth:
                if truth is not None:
                    assert truth.level is truth.criticality

    def test_category_weights_respected(self):
        mix = MixConfig(category_weights={
            category: (1.0 if category is HazardCategory.WASTE else 0.0)
            for category in HazardCategory
        })
        suite = generate(4, 20, mix)
        seen = {
            t.category for s in suite for t in s.ground_truth if t is not None
        }
        assert seen == {HazardCategory.WASTE}


class TestRunSuite:
    def test_coordination_is_exact_with_memory_sinks(self):
        report = run_suite(builtin_suite(), {"scripted": ScriptedBackend()})
        assert report.results["scripted"].sub_metrics.eps_coord == 1.0

    def test_scripted_alignment_perfect_on_clean_suites(self):
        # The deterministic policy cannot misalign tone or character on its
        # own; misalignment only enters through degraded backends.
        clean_builtin = [s for s in builtin_suite() if s.fault_profile is None]
        for suite in (clean_builtin, sixty_run_suite()):
            report = run_suite(suite, {"scripted": ScriptedBackend()})
            assert report.results["scripted"].sub_metrics.eps_msg == 1.0
            assert report.results["scripted"].sub_metrics.eps_det == 1.0

    def test_builtin_scripted_beats_object_baseline(self):
        report = run_suite(
            builtin_suite(),
            {"scripted": ScriptedBackend(), "object-baseline": ObjectBaselineBackend()},
        )
        scripted = report.results["scripted"].sub_metrics.eps_det
        baseline = report.results["object-baseline"].sub_metrics.eps_det
        assert scripted > baseline

    def test_deliveries_match_recipient_sets(self):
        run = run_scenario(
            builtin_suite()[0], ScriptedBackend(), EngineConfig()
        )
        for record, group in zip(run.trace, run.deliveries):
            if record.criticality is None:
                assert group == []
            else:
                assert {r.channel for r in group} == recipients_for(record.criticality)

    def test_degraded_scenario_uses_fallback_but_still_communicates(self):
        suite = {s.scenario_id: s for s in builtin_suite()}
        run = run_scenario(
            suite["S8-degraded-backend"], ScriptedBackend(), EngineConfig()
        )
        hazard_steps = [r for r in run.trace if r.criticality is not None]
        assert hazard_steps
        assert all(r.fallback for r in hazard_steps)
        assert run.fallback_steps == len(hazard_steps)
        # no-hazard step still recorded explicitly
        assert any(r.criticality is None for r in run.trace)

    def test_reports_are_deterministic(self):
        def render():
            report = run_suite(
                builtin_suite() + generate(7, 6),
                {
                    "scripted": ScriptedBackend(),
                    "location-baseline": LocationBaselineBackend(),
                },
            )
            return json.dumps(report.to_json_dict(), sort_keys=True)

        assert render() == render()

    def test_rejects_empty_inputs(self):
        with pytest.raises(ValidationError):
            run_suite([], {"scripted": ScriptedBackend()})
        with pytest.raises(ValidationError):
            run_suite(builtin_suite(), {})

    def test_rejects_duplicate_scenario_ids(self):
        suite = builtin_suite()
        with pytest.raises(ConfigurationError, match="duplicate"):
            run_suite(suite + [suite[0]], {"scripted": ScriptedBackend()})

    def test_text_report_renders(self):
        report = run_suite(builtin_suite(), {"scripted": ScriptedBackend()})
        text = report.to_text()
        assert "scripted" in text
        assert "violations: none" in text
