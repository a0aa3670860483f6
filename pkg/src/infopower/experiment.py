"""Headless synthetic-user sessions and the two-arm comparison pipeline.

Synthetic users play scripted roles against the advisor: a random
button-pusher, an imitator that applies whatever the advisor suggests,
and an explanation-sensitive learner that acquires catalog rules
stochastically from each exchange (with a bonus when a contrastive
explanation names exactly the action it was about to take). Sessions are
pure functions of their seed, so the whole report reproduces bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .explain import UsedNodeLedger, UserModel, XaiMode, answer_what, answer_why
from .fixtures import build_reference_tree
from .metrics import (
    DegenerateWeightsError,
    InteractionEvent,
    RuleCatalog,
    attribute_interaction,
    empirical_weights,
    information_power,
    information_power_user,
    load_default_catalog,
    score_quiz,
    uniform_weights,
)
from .plantsim import NUM_ACTIONS, Action, PlantConfig, apply_action, new_plant
from .treepolicy import DecisionTreePolicy, expert_action, policy_accuracy, sample_states

REPORT_SCHEMA = "experiment-report/1"
PROFILE_KINDS = ("random", "imitator", "learner")


class ExperimentError(Exception):
    pass


@dataclass(frozen=True)
class SyntheticUserProfile:
    kind: str = "learner"
    ask_what_p: float = 0.8
    ask_why_p: float = 0.8
    p_base: float = 0.1
    p_explained: float = 0.2
    p_counterfactual_bonus: float = 0.5
    follow_p: float = 0.5

    def validate(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise ExperimentError(f"unknown profile kind {self.kind!r}")
        for name in (
            "ask_what_p",
            "ask_why_p",
            "p_base",
            "p_explained",
            "p_counterfactual_bonus",
            "follow_p",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ExperimentError(f"{name} must lie in [0, 1], got {value}")
        if self.p_explained < self.p_base:
            raise ExperimentError("p_explained must be at least p_base")

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SyntheticUserProfile":
        profile = cls(**{k: v for k, v in doc.items() if k in cls.__dataclass_fields__})
        profile.validate()
        return profile


@dataclass(frozen=True)
class StepRecord:
    step: int
    state: dict
    action: int
    asked_what: bool
    suggestion: dict | None
    asked_why: bool
    explanation: dict | None
    energy: float
    events: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "type": "step",
            "step": self.step,
            "state": self.state,
            "action": self.action,
            "asked_what": self.asked_what,
            "suggestion": self.suggestion,
            "asked_why": self.asked_why,
            "explanation": self.explanation,
            "energy": self.energy,
            "events": list(self.events),
        }


@dataclass(frozen=True)
class SessionLog:
    mode: str
    profile: SyntheticUserProfile
    seed: int
    records: tuple[StepRecord, ...]
    final_score: float
    quiz_answers: dict
    rules_marked_learned: tuple[str, ...]

    @property
    def what_count(self) -> int:
        return sum(1 for r in self.records if r.asked_what)

    @property
    def why_count(self) -> int:
        return sum(1 for r in self.records if r.asked_why)

    def interaction_feature_counts(self, feature_count: int = 8) -> np.ndarray:
        """Per-feature exchange counts via the attribution rule."""
        counts = np.zeros(feature_count, dtype=int)
        for record in self.records:
            if not record.asked_what:
                continue
            explanation_feature = None
            if record.asked_why and record.explanation is not None:
                explanation_feature = record.explanation.get("feature")
            if record.asked_why and explanation_feature is None:
                continue  # degenerate single-leaf explanation: nothing attributable
            event = InteractionEvent(
                suggested_action=Action(record.suggestion["action"]),
                explanation_feature=explanation_feature,
            )
            counts[attribute_interaction(event)] += 1
        return counts

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "type": "session",
                    "mode": self.mode,
                    "seed": self.seed,
                    "profile": self.profile.to_json_dict(),
                },
                sort_keys=True,
            )
        ]
        lines.extend(json.dumps(r.to_json_dict(), sort_keys=True) for r in self.records)
        lines.append(
            json.dumps(
                {
                    "type": "quiz",
                    "answers": self.quiz_answers,
                    "final_score": self.final_score,
                    "rules_marked_learned": list(self.rules_marked_learned),
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def _intended_action(profile: SyntheticUserProfile, state, config: PlantConfig, rng) -> Action:
    if profile.kind == "learner":
        # naive habit: top up the water when low, otherwise wait and see
        if state.water_level <= config.low_water_threshold:
            return Action.ADD_WATER
        return Action.SKIP
    return Action(int(rng.integers(NUM_ACTIONS)))


def run_session(
    tree: DecisionTreePolicy,
    mode: XaiMode | str,
    profile: SyntheticUserProfile,
    config: PlantConfig,
    seed: int,
    catalog: RuleCatalog,
) -> SessionLog:
    """Simulate one user's episode plus quiz; deterministic under seed."""
    profile.validate()
    mode = XaiMode(mode)
    rng = np.random.default_rng(seed)
    state = new_plant(config)
    ledger = UsedNodeLedger()
    user_model = UserModel(config)
    learned: list[str] = []
    learned_set: set[str] = set()
    records: list[StepRecord] = []

    while not state.damaged and state.step_index < config.episode_steps:
        intended = _intended_action(profile, state, config, rng)
        suggestion = None
        explanation = None
        asked_what = rng.random() < profile.ask_what_p
        asked_why = False
        if asked_what:
            suggestion = answer_what(tree, state)
            asked_why = rng.random() < profile.ask_why_p
            if asked_why:
                explanation = answer_why(tree, state, mode, ledger, user_model)
            # stochastic rule acquisition keyed to the attributed feature
            draw = rng.random()
            if profile.kind == "learner":
                if asked_why and explanation.feature_index is not None:
                    p = profile.p_explained
                    if explanation.foil_action is not None and explanation.foil_action == intended:
                        p = min(1.0, p + profile.p_counterfactual_bonus)
                    feature = explanation.feature_index
                elif not asked_why:
                    p = profile.p_base
                    feature = attribute_interaction(
                        InteractionEvent(suggested_action=suggestion.action)
                    )
                else:
                    p, feature = 0.0, None
                if feature is not None and draw < p:
                    for rule in catalog.rules_for_feature(feature):
                        if rule.rule_id not in learned_set:
                            learned_set.add(rule.rule_id)
                            learned.append(rule.rule_id)
                            break

        if profile.kind == "random" or suggestion is None:
            action = intended
        elif profile.kind == "imitator":
            action = suggestion.action
        else:  # learner follows advice only part of the time
            action = suggestion.action if rng.random() < profile.follow_p else intended

        user_model.observe(state, action)
        outcome = apply_action(state, action, config)
        records.append(
            StepRecord(
                step=state.step_index,
                state=state.to_json_dict(),
                action=int(action),
                asked_what=asked_what,
                suggestion=None if suggestion is None else suggestion.to_json_dict(),
                asked_why=asked_why,
                explanation=None if explanation is None else explanation.to_json_dict(),
                energy=outcome.energy_produced,
                events=outcome.events,
            )
        )
        state = outcome.next_state

    quiz_answers = _answer_quiz(profile, learned_set, catalog, rng)
    return SessionLog(
        mode=mode.value,
        profile=profile,
        seed=seed,
        records=tuple(records),
        final_score=state.energy_total,
        quiz_answers=quiz_answers,
        rules_marked_learned=tuple(learned),
    )


def _guess_distractor(choices: tuple[str, ...], answer: int, rng) -> int:
    # uniform over the wrong options, so quiz-measured learning equals
    # true acquisition and the scored counts carry no guessing noise
    idx = int(rng.integers(len(choices) - 1))
    return idx + 1 if idx >= answer else idx


def _answer_quiz(
    profile: SyntheticUserProfile, learned: set[str], catalog: RuleCatalog, rng
) -> dict:
    answers: dict[str, int] = {}
    for item in catalog.quiz_items:
        if profile.kind == "learner" and item.rule_id in learned:
            answers[item.item_id] = item.answer
        else:
            answers[item.item_id] = _guess_distractor(item.choices, item.answer, rng)
    total_rules = len(catalog.rules)
    fraction_learned = len(learned) / total_rules if total_rules else 0.0
    for item in catalog.what_if_items:
        if profile.kind == "learner" and rng.random() < fraction_learned:
            answers[item.item_id] = item.answer
        else:
            answers[item.item_id] = _guess_distractor(item.choices, item.answer, rng)
    return answers


# ---------------------------------------------------------------------------
# The two-arm experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    n_users: int = 20
    modes: tuple[str, ...] = ("classical", "user-aware")
    profile: SyntheticUserProfile = field(default_factory=SyntheticUserProfile)
    base_seed: int = 7
    weights: str = "uniform"  # or "empirical" (pooled per arm)
    plant: PlantConfig = field(default_factory=PlantConfig)
    tree_path: str | None = None
    accuracy_eval_states: int = 500

    def validate(self) -> None:
        if self.n_users < 1:
            raise ExperimentError("n_users must be at least 1 per arm")
        if not self.modes:
            raise ExperimentError("at least one mode is required")
        for mode in self.modes:
            XaiMode(mode)
        if self.weights not in ("uniform", "empirical"):
            raise ExperimentError(f"unknown weight scheme {self.weights!r}")
        self.profile.validate()
        self.plant.validate()

    def to_json_dict(self) -> dict:
        return {
            "n_users": self.n_users,
            "modes": list(self.modes),
            "profile": self.profile.to_json_dict(),
            "base_seed": self.base_seed,
            "weights": self.weights,
            "plant": self.plant.to_json_dict(),
            "tree_path": self.tree_path,
            "accuracy_eval_states": self.accuracy_eval_states,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        kwargs = dict(doc)
        kwargs.pop("schema", None)
        if "profile" in kwargs:
            kwargs["profile"] = SyntheticUserProfile.from_json_dict(kwargs["profile"])
        if "plant" in kwargs:
            kwargs["plant"] = PlantConfig.from_json_dict(kwargs["plant"])
        if "modes" in kwargs:
            kwargs["modes"] = tuple(kwargs["modes"])
        config = cls(**{k: v for k, v in kwargs.items() if k in cls.__dataclass_fields__})
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class ExperimentReport:
    doc: dict
    sessions: dict[str, tuple[SessionLog, ...]]

    def arm_ip(self, mode: str) -> float:
        return self.doc["arms"][mode]["ip"]

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = ["arm,user_id,seed,ip,final_score,rules_learned,what_count,why_count,what_if_correct"]
        for mode, arm in self.doc["arms"].items():
            for user in arm["users"]:
                lines.append(
                    f"{mode},{user['user_id']},{user['seed']},{user['ip']:.6f},"
                    f"{user['final_score']:.6f},{sum(user['learned_per_feature'])},"
                    f"{user['what_count']},{user['why_count']},{user['what_if_correct']}"
                )
            lines.append(f"{mode},AGGREGATE,,{arm['ip']:.6f},,,,,")
        return "\n".join(lines) + "\n"


def run_experiment(
    config: ExperimentConfig, catalog: RuleCatalog | None = None
) -> ExperimentReport:
    """Run every arm with paired per-user seeds and report per-arm scores."""
    config.validate()
    catalog = catalog or load_default_catalog()
    if config.tree_path:
        tree = DecisionTreePolicy.load(config.tree_path)
    else:
        tree = build_reference_tree()

    eval_states = sample_states(config.plant, config.accuracy_eval_states, seed=config.base_seed + 90_001)
    a_m = policy_accuracy(tree, eval_states, lambda s: expert_action(s, config.plant))

    arms: dict[str, dict] = {}
    sessions: dict[str, tuple[SessionLog, ...]] = {}
    for mode in config.modes:
        logs = tuple(
            run_session(tree, mode, config.profile, config.plant, config.base_seed + i, catalog)
            for i in range(config.n_users)
        )
        sessions[mode] = logs
        pooled_counts = np.sum(
            [log.interaction_feature_counts(catalog.feature_count) for log in logs], axis=0
        )
        try:
            arm_empirical = empirical_weights(pooled_counts)
        except DegenerateWeightsError:
            arm_empirical = None
        if config.weights == "empirical" and arm_empirical is not None:
            weights = arm_empirical
        else:
            weights = uniform_weights(catalog.feature_count)

        users = []
        ips = []
        for i, log in enumerate(logs):
            score = score_quiz(log.quiz_answers, catalog)
            ip = information_power_user(a_m, weights, score.learned_per_feature, catalog)
            ips.append(ip)
            users.append(
                {
                    "user_id": f"user{i:03d}",
                    "seed": log.seed,
                    "ip": ip,
                    "learned_per_feature": list(score.learned_per_feature),
                    "interaction_counts": log.interaction_feature_counts(
                        catalog.feature_count
                    ).tolist(),
                    "final_score": log.final_score,
                    "rule_items_correct": score.rule_items_correct,
                    "what_if_correct": score.what_if_correct,
                    "what_count": log.what_count,
                    "why_count": log.why_count,
                    "questionnaire": {},  # M4/M5 placeholders: no synthetic analogue
                }
            )
        arms[mode] = {
            "ip": information_power(ips),
            "weights_scheme": config.weights,
            "weights": weights.tolist(),
            "empirical_weights": None if arm_empirical is None else arm_empirical.tolist(),
            "attribution_counts": pooled_counts.tolist(),
            "m1_mean_final_score": float(np.mean([log.final_score for log in logs])),
            "m2_mean_rules_learned": float(
                np.mean([sum(u["learned_per_feature"]) for u in users])
            ),
            "m2_what_count": int(sum(log.what_count for log in logs)),
            "m2_why_count": int(sum(log.why_count for log in logs)),
            "m3_mean_what_if_correct": float(np.mean([u["what_if_correct"] for u in users])),
            "users": users,
        }

    doc = {
        "schema": REPORT_SCHEMA,
        "config": config.to_json_dict(),
        "a_m": a_m,
        "arms": arms,
    }
    return ExperimentReport(doc=doc, sessions=sessions)


def write_experiment_outputs(report: ExperimentReport, out_dir: str | Path) -> None:
    """Emit report.json, summary.csv and per-session logs/*.jsonl."""
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "summary.csv").write_text(report.to_csv(), encoding="utf-8")
    for mode, logs in report.sessions.items():
        slug = mode.replace("-", "_")
        for i, log in enumerate(logs):
            (out / "logs" / f"{slug}_user{i:03d}.jsonl").write_text(
                log.to_jsonl(), encoding="utf-8"
            )
