import json

import pytest

from infopower.experiment import (
    ExperimentConfig,
    ExperimentError,
    SyntheticUserProfile,
    run_experiment,
    run_session,
    write_experiment_outputs,
)
from infopower.fixtures import build_reference_tree
from infopower.metrics import load_default_catalog
from infopower.plantsim import Action, PlantConfig

CONFIG = PlantConfig()
CATALOG = load_default_catalog()
TREE = build_reference_tree()


class TestProfiles:
    def test_probabilities_validated(self):
        with pytest.raises(ExperimentError):
            SyntheticUserProfile(ask_what_p=1.5).validate()

    def test_explained_must_dominate_base(self):
        with pytest.raises(ExperimentError):
            SyntheticUserProfile(p_base=0.5, p_explained=0.2).validate()

    def test_unknown_kind_rejected(self):
        with pytest.raises(ExperimentError):
            SyntheticUserProfile(kind="psychic").validate()


class TestRunSession:
    def test_silent_profile_never_asks(self):
        profile = SyntheticUserProfile(kind="random", ask_what_p=0.0, ask_why_p=0.0)
        log = run_session(TREE, "classical", profile, CONFIG, seed=5, catalog=CATALOG)
        assert log.what_count == 0
        assert log.why_count == 0
        assert all(r.suggestion is None and r.explanation is None for r in log.records)

    def test_seeded_rerun_is_identical(self):
        profile = SyntheticUserProfile()
        a = run_session(TREE, "user-aware", profile, CONFIG, seed=9, catalog=CATALOG)
        b = run_session(TREE, "user-aware", profile, CONFIG, seed=9, catalog=CATALOG)
        assert a.to_jsonl() == b.to_jsonl()

    def test_imitator_always_applies_suggestions(self):
        profile = SyntheticUserProfile(kind="imitator", ask_what_p=1.0, ask_why_p=0.3)
        log = run_session(TREE, "classical", profile, CONFIG, seed=11, catalog=CATALOG)
        for record in log.records:
            if record.action != int(Action.SKIP):
                assert record.suggestion is not None
                assert record.action == record.suggestion["action"]

    def test_why_requires_what_in_every_record(self):
        profile = SyntheticUserProfile(ask_what_p=0.5, ask_why_p=0.9)
        log = run_session(TREE, "user-aware", profile, CONFIG, seed=13, catalog=CATALOG)
        for record in log.records:
            if record.asked_why:
                assert record.asked_what
        assert log.what_count >= log.why_count

    def test_final_score_accumulates_energy(self):
        profile = SyntheticUserProfile(kind="imitator", ask_what_p=1.0, ask_why_p=0.0)
        log = run_session(TREE, "classical", profile, CONFIG, seed=2, catalog=CATALOG)
        assert log.final_score == pytest.approx(sum(r.energy for r in log.records))
        assert log.final_score > 0.0

    def test_learner_quiz_reflects_marked_rules(self):
        profile = SyntheticUserProfile(ask_what_p=1.0, ask_why_p=1.0, p_explained=1.0)
        log = run_session(TREE, "classical", profile, CONFIG, seed=4, catalog=CATALOG)
        assert log.rules_marked_learned
        for rule_id in log.rules_marked_learned:
            item = CATALOG.quiz_item_for_rule(rule_id)
            assert log.quiz_answers[item.item_id] == item.answer


class TestRunExperiment:
    def test_zero_learning_gives_zero_ip(self):
        profile = SyntheticUserProfile(
            p_base=0.0, p_explained=0.0, p_counterfactual_bonus=0.0
        )
        config = ExperimentConfig(n_users=1, profile=profile, base_seed=1)
        report = run_experiment(config, CATALOG)
        for mode in config.modes:
            assert report.arm_ip(mode) == 0.0

    def test_paired_seeds_share_trajectories(self):
        config = ExperimentConfig(n_users=3, base_seed=42)
        report = run_experiment(config, CATALOG)
        classical = report.sessions["classical"]
        user_aware = report.sessions["user-aware"]
        for log_c, log_u in zip(classical, user_aware):
            assert log_c.seed == log_u.seed
            assert [r.action for r in log_c.records] == [r.action for r in log_u.records]
            assert log_c.what_count == log_u.what_count

    def test_report_is_reproducible(self):
        config = ExperimentConfig(n_users=5, base_seed=3)
        a = run_experiment(config, CATALOG)
        b = run_experiment(config, CATALOG)
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_what_never_fewer_than_why(self):
        report = run_experiment(ExperimentConfig(n_users=5, base_seed=8), CATALOG)
        for logs in report.sessions.values():
            for log in logs:
                assert log.what_count >= log.why_count

    def test_user_aware_beats_classical_in_shipped_fixture(self):
        report = run_experiment(ExperimentConfig(), CATALOG)
        assert report.arm_ip("user-aware") > report.arm_ip("classical")

    def test_all_ips_in_unit_interval(self):
        report = run_experiment(ExperimentConfig(n_users=5, base_seed=19), CATALOG)
        for mode, arm in report.doc["arms"].items():
            assert 0.0 <= arm["ip"] <= 1.0
            for user in arm["users"]:
                assert 0.0 <= user["ip"] <= 1.0

    def test_empirical_weights_scheme(self):
        config = ExperimentConfig(n_users=4, base_seed=6, weights="empirical")
        report = run_experiment(config, CATALOG)
        for arm in report.doc["arms"].values():
            assert arm["weights_scheme"] == "empirical"
            assert abs(sum(arm["weights"]) - 1.0) < 1e-9

    def test_empty_arm_rejected(self):
        with pytest.raises(ExperimentError):
            ExperimentConfig(n_users=0).validate()

    def test_attribution_tables_present(self):
        report = run_experiment(ExperimentConfig(n_users=3, base_seed=2), CATALOG)
        for arm in report.doc["arms"].values():
            counts = arm["attribution_counts"]
            assert len(counts) == 8
            assert sum(counts) > 0


class TestOutputs:
    def test_output_files_written(self, tmp_path):
        config = ExperimentConfig(n_users=2, base_seed=14)
        report = run_experiment(config, CATALOG)
        write_experiment_outputs(report, tmp_path)
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "summary.csv").exists()
        logs = sorted(p.name for p in (tmp_path / "logs").iterdir())
        assert logs == [
            "classical_user000.jsonl",
            "classical_user001.jsonl",
            "user_aware_user000.jsonl",
            "user_aware_user001.jsonl",
        ]
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["schema"] == "experiment-report/1"

    def test_config_file_round_trip(self, tmp_path):
        config = ExperimentConfig(n_users=2, base_seed=5, weights="empirical")
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(config.to_json_dict()))
        loaded = ExperimentConfig.from_file(path)
        assert loaded == config
