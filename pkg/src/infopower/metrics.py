"""Information-power scoring: rule catalog, feature weights, quiz marking.

A user's score for one advisor is the model accuracy times the
weighted fraction of task rules they learned per feature; the advisor's
overall score is the plain mean over users. Both always land in [0, 1].
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from math import fsum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .plantsim import Action

CATALOG_SCHEMA = "rule-catalog/1"
REPORT_SCHEMA = "ip-report/1"

WEIGHT_SUM_TOLERANCE = 1e-9


class MetricsError(Exception):
    pass


class CatalogError(MetricsError):
    pass


class WeightError(MetricsError):
    """A weight vector breaks the sum-to-one rule or its entry bounds."""


class DegenerateWeightsError(WeightError):
    """All interaction counts are zero; empirical weights are undefined."""


class UnknownQuizItemError(MetricsError):
    pass


# Which feature an action primarily moves: rod actions map to their rod,
# adding water moves the steam-generator level, skipping leaves only the
# passive power update.
ACTION_PRIMARY_FEATURE: dict[Action, int] = {
    Action.SECURITY_UP: 4,
    Action.SECURITY_DOWN: 4,
    Action.FUEL_UP: 5,
    Action.FUEL_DOWN: 5,
    Action.SUSTAIN_UP: 6,
    Action.SUSTAIN_MEDIUM: 6,
    Action.SUSTAIN_DOWN: 6,
    Action.REGULATORY_UP: 7,
    Action.REGULATORY_MEDIUM: 7,
    Action.REGULATORY_DOWN: 7,
    Action.ADD_WATER: 2,
    Action.SKIP: 3,
}


@dataclass(frozen=True)
class QuizItem:
    item_id: str
    prompt: str
    choices: tuple[str, ...]
    answer: int
    rule_id: str


@dataclass(frozen=True)
class RuleEntry:
    rule_id: str
    feature: int
    statement: str
    quiz_item_id: str


@dataclass(frozen=True)
class WhatIfItem:
    item_id: str
    prompt: str
    features: tuple[float, ...]
    choices: tuple[str, ...]
    answer: int


@dataclass(frozen=True)
class RuleCatalog:
    feature_count: int
    rules: tuple[RuleEntry, ...]
    quiz_items: tuple[QuizItem, ...]
    what_if_items: tuple[WhatIfItem, ...]

    def validate(self) -> None:
        rule_ids = [r.rule_id for r in self.rules]
        if len(set(rule_ids)) != len(rule_ids):
            raise CatalogError("rule ids must be unique")
        item_ids = [q.item_id for q in self.quiz_items] + [w.item_id for w in self.what_if_items]
        if len(set(item_ids)) != len(item_ids):
            raise CatalogError("quiz item ids must be unique")
        quiz_rule_ids = [q.rule_id for q in self.quiz_items]
        if sorted(quiz_rule_ids) != sorted(rule_ids):
            raise CatalogError("quiz items must map one-to-one onto rules")
        counts = self.rules_per_feature()
        for j, n in enumerate(counts):
            if n < 1:
                raise CatalogError(f"feature {j} has no rules in the catalog")
        for rule in self.rules:
            if not 0 <= rule.feature < self.feature_count:
                raise CatalogError(f"rule {rule.rule_id} references feature {rule.feature}")

    def rules_per_feature(self) -> np.ndarray:
        counts = np.zeros(self.feature_count, dtype=int)
        for rule in self.rules:
            counts[rule.feature] += 1
        return counts

    def rule(self, rule_id: str) -> RuleEntry:
        for entry in self.rules:
            if entry.rule_id == rule_id:
                return entry
        raise CatalogError(f"unknown rule id {rule_id!r}")

    def rules_for_feature(self, feature: int) -> list[RuleEntry]:
        return [r for r in self.rules if r.feature == feature]

    def quiz_item(self, item_id: str):
        for item in self.quiz_items:
            if item.item_id == item_id:
                return item
        for item in self.what_if_items:
            if item.item_id == item_id:
                return item
        raise UnknownQuizItemError(f"unknown quiz item id {item_id!r}")

    def quiz_item_for_rule(self, rule_id: str) -> QuizItem:
        for item in self.quiz_items:
            if item.rule_id == rule_id:
                return item
        raise CatalogError(f"no quiz item for rule {rule_id!r}")

    def quiz_sheet(self) -> dict:
        """Client-facing sheet: prompts and choices only, never answers."""
        return {
            "schema": "quiz-sheet/1",
            "items": [
                {"item_id": q.item_id, "prompt": q.prompt, "choices": list(q.choices)}
                for q in self.quiz_items
            ],
            "what_if": [
                {"item_id": w.item_id, "prompt": w.prompt, "choices": list(w.choices)}
                for w in self.what_if_items
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RuleCatalog":
        if doc.get("schema") != CATALOG_SCHEMA:
            raise CatalogError(f"unsupported catalog schema {doc.get('schema')!r}")
        rules = []
        quiz_items = []
        for rule_doc in doc["rules"]:
            quiz = rule_doc["quiz"]
            rules.append(
                RuleEntry(
                    rule_id=rule_doc["id"],
                    feature=int(rule_doc["feature"]),
                    statement=rule_doc["statement"],
                    quiz_item_id=quiz["item_id"],
                )
            )
            quiz_items.append(
                QuizItem(
                    item_id=quiz["item_id"],
                    prompt=quiz["prompt"],
                    choices=tuple(quiz["choices"]),
                    answer=int(quiz["answer"]),
                    rule_id=rule_doc["id"],
                )
            )
        what_if = tuple(
            WhatIfItem(
                item_id=rule_doc["item_id"],
                prompt=rule_doc["prompt"],
                features=tuple(float(v) for v in rule_doc["features"]),
                choices=tuple(rule_doc["choices"]),
                answer=int(rule_doc["answer"]),
            )
            for rule_doc in doc.get("what_if", [])
        )
        catalog = cls(
            feature_count=int(doc["feature_count"]),
            rules=tuple(rules),
            quiz_items=tuple(quiz_items),
            what_if_items=what_if,
        )
        catalog.validate()
        return catalog

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleCatalog":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def load_default_catalog() -> RuleCatalog:
    """The shipped 16-rule catalog (two rules per plant feature)."""
    text = resources.files("infopower.data").joinpath("rule_catalog.json").read_text("utf-8")
    return RuleCatalog.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Feature weights
# ---------------------------------------------------------------------------


def validate_weights(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or len(weights) < 1:
        raise WeightError("weights must be a non-empty vector")
    if np.any(weights < 0.0) or np.any(weights > 1.0):
        raise WeightError("every weight must lie in [0, 1]")
    total = fsum(weights.tolist())
    if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise WeightError(f"weights must sum to 1 within {WEIGHT_SUM_TOLERANCE}, got {total!r}")
    return weights


def uniform_weights(k: int) -> np.ndarray:
    """Equal informative weight 1/k for each of k features."""
    if k < 1:
        raise WeightError(f"feature count must be at least 1, got {k}")
    return np.full(k, 1.0 / k)


def empirical_weights(interaction_counts: Sequence[float] | np.ndarray) -> np.ndarray:
    """Weights from normalised per-feature interaction counts."""
    counts = np.asarray(interaction_counts, dtype=float)
    if counts.ndim != 1 or len(counts) < 1:
        raise WeightError("interaction counts must be a non-empty vector")
    if np.any(counts < 0.0):
        raise WeightError("interaction counts must be non-negative")
    total = counts.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("all interaction counts are zero")
    return counts / total


# ---------------------------------------------------------------------------
# The information-power measure
# ---------------------------------------------------------------------------


def information_power_user(
    a_m: float,
    weights: np.ndarray,
    learned_counts: Sequence[int] | np.ndarray,
    catalog: RuleCatalog,
) -> float:
    """Per-user score: a_m * sum_j gamma_j * (learned_j / total_j)."""
    if not 0.0 <= a_m <= 1.0:
        raise MetricsError(f"model accuracy must lie in [0, 1], got {a_m}")
    weights = validate_weights(weights)
    learned = np.asarray(learned_counts, dtype=float)
    totals = catalog.rules_per_feature().astype(float)
    if len(weights) != catalog.feature_count or len(learned) != catalog.feature_count:
        raise MetricsError(
            f"expected {catalog.feature_count} features, got {len(weights)} weights "
            f"and {len(learned)} learned counts"
        )
    if np.any(learned < 0.0):
        raise MetricsError("learned counts must be non-negative")
    if np.any(learned > totals):
        j = int(np.argmax(learned - totals))
        raise MetricsError(
            f"learned count for feature {j} exceeds the catalog total "
            f"({learned[j]:g} > {totals[j]:g})"
        )
    return float(a_m * np.sum(weights * (learned / totals)))


def information_power(per_user_values: Sequence[float]) -> float:
    """Mean per-user score over everyone who took part."""
    if len(per_user_values) < 1:
        raise MetricsError("at least one per-user value is required")
    values = np.asarray(per_user_values, dtype=float)
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise MetricsError("per-user values must lie in [0, 1]")
    return float(values.mean())


# ---------------------------------------------------------------------------
# Interaction attribution and quiz scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionEvent:
    """One completed advisor exchange: a what, optionally followed by a why."""

    suggested_action: Action
    explanation_feature: int | None = None


def attribute_interaction(
    event: InteractionEvent,
    action_feature_table: Mapping[Action, int] | None = None,
) -> int:
    """Feature an exchange was about: the explained one, else the suggested action's."""
    if event.explanation_feature is not None:
        return int(event.explanation_feature)
    table = ACTION_PRIMARY_FEATURE if action_feature_table is None else action_feature_table
    try:
        return table[Action(event.suggested_action)]
    except (KeyError, ValueError) as exc:
        raise MetricsError(f"no feature mapping for action {event.suggested_action!r}") from exc


@dataclass(frozen=True)
class QuizScore:
    learned_per_feature: tuple[int, ...]
    rule_items_correct: int
    what_if_correct: int
    what_if_total: int


def score_quiz(answers: Mapping[str, int], catalog: RuleCatalog) -> QuizScore:
    """Mark an answer sheet: per-feature learned-rule counts plus what-if tally.

    What-if items measure generalisation and stay out of the per-feature
    learned counts.
    """
    known_rule_items = {q.item_id: q for q in catalog.quiz_items}
    known_what_if = {w.item_id: w for w in catalog.what_if_items}
    learned = np.zeros(catalog.feature_count, dtype=int)
    rule_correct = 0
    what_if_correct = 0
    for item_id, choice in answers.items():
        if item_id in known_rule_items:
            item = known_rule_items[item_id]
            if int(choice) == item.answer:
                rule_correct += 1
                learned[catalog.rule(item.rule_id).feature] += 1
        elif item_id in known_what_if:
            if int(choice) == known_what_if[item_id].answer:
                what_if_correct += 1
        else:
            raise UnknownQuizItemError(f"unknown quiz item id {item_id!r}")
    return QuizScore(
        learned_per_feature=tuple(int(v) for v in learned),
        rule_items_correct=rule_correct,
        what_if_correct=what_if_correct,
        what_if_total=len(catalog.what_if_items),
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    ip: float
    learned_per_feature: tuple[int, ...]
    interaction_counts: tuple[int, ...]
    final_score: float
    rule_items_correct: int
    what_if_correct: int
    quiz_answers: dict = field(default_factory=dict)
    questionnaire: dict = field(default_factory=dict)  # M4/M5 stored raw


@dataclass(frozen=True)
class IPReport:
    a_m: float
    weights: tuple[float, ...]
    users: tuple[UserRecord, ...]

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def ip(self) -> float:
        return information_power([u.ip for u in self.users])

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "a_m": self.a_m,
            "weights": list(self.weights),
            "n_users": self.n_users,
            "ip": self.ip,
            "users": [
                {
                    "user_id": u.user_id,
                    "ip": u.ip,
                    "learned_per_feature": list(u.learned_per_feature),
                    "interaction_counts": list(u.interaction_counts),
                    "final_score": u.final_score,
                    "rule_items_correct": u.rule_items_correct,
                    "what_if_correct": u.what_if_correct,
                    "quiz_answers": u.quiz_answers,
                    "questionnaire": u.questionnaire,
                }
                for u in self.users
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["user_id", "ip", "final_score", "rules_learned", "rule_items_correct", "what_if_correct"]
        )
        for u in self.users:
            writer.writerow(
                [
                    u.user_id,
                    f"{u.ip:.6f}",
                    f"{u.final_score:.6f}",
                    sum(u.learned_per_feature),
                    u.rule_items_correct,
                    u.what_if_correct,
                ]
            )
        writer.writerow(["AGGREGATE", f"{self.ip:.6f}", "", "", "", ""])
        return buf.getvalue()
