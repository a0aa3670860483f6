"""What/why answering over the advisor tree.

Two selection strategies decide which decision-path condition backs a
*why* answer. The classical one walks the fact path from the root and
picks the shallowest split not yet shown to this user, cycling
least-recently-used once all are spent. The user-aware one predicts the
user's next action from an observation model, finds the closest leaf
advertising that action (the foil) and explains the single split where
the advisor's path and the foil's path part ways.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .plantsim import NUM_ACTIONS, Action, PlantConfig, PlantState, feature_bounds, feature_vector
from .treepolicy import OP_GT, OP_LE, DecisionTreePolicy, DescentPath, StructuralTreeError

EXPLANATION_SCHEMA = "explanation/1"

NO_SPLIT_TEXT = "no conditions were tested"


class ExplainError(Exception):
    pass


class NoExplainableSplitError(ExplainError):
    """The fact path has no splits (single-leaf tree)."""


class XaiMode(str, Enum):
    CLASSICAL = "classical"
    USER_AWARE = "user-aware"


FEATURE_PHRASES = {
    0: "the temperature of the water in the reactor core",
    1: "the pressure in the reactor core",
    2: "the water level in the steam generator",
    3: "the reactor power",
    4: "the security rods setting",
    5: "the fuel rods setting",
    6: "the sustain rods setting",
    7: "the regulatory rods setting",
}

FEATURE_UNITS = {0: " °C", 1: " bar", 2: "", 3: " MW", 4: "", 5: "", 6: "", 7: ""}

ACTION_PHRASES = {
    Action.SECURITY_UP: "raise the security rods",
    Action.SECURITY_DOWN: "lower the security rods",
    Action.FUEL_UP: "raise the fuel rods",
    Action.FUEL_DOWN: "lower the fuel rods",
    Action.SUSTAIN_UP: "raise the sustain rods",
    Action.SUSTAIN_MEDIUM: "set the sustain rods to medium",
    Action.SUSTAIN_DOWN: "lower the sustain rods",
    Action.REGULATORY_UP: "raise the regulatory rods",
    Action.REGULATORY_MEDIUM: "set the regulatory rods to medium",
    Action.REGULATORY_DOWN: "lower the regulatory rods",
    Action.ADD_WATER: "add water to the steam generator",
    Action.SKIP: "skip",
}


@dataclass(frozen=True)
class Suggestion:
    action: Action
    path: DescentPath
    leaf_id: int

    def to_json_dict(self) -> dict:
        return {
            "action": int(self.action),
            "action_name": self.action.name.lower(),
            "leaf_id": self.leaf_id,
            "path": [s.node_id for s in self.path.steps],
            "text": f"I would {ACTION_PHRASES[self.action]}",
        }


@dataclass(frozen=True)
class Explanation:
    node_id: int | None
    feature_index: int | None
    threshold: float | None
    op: str | None  # "<=" or ">"
    mode: XaiMode
    foil_action: Action | None
    text: str

    def to_json_dict(self) -> dict:
        return {
            "schema": EXPLANATION_SCHEMA,
            "node_id": self.node_id,
            "feature": self.feature_index,
            "op": self.op,
            "value": self.threshold,
            "mode": self.mode.value,
            "foil": None if self.foil_action is None else int(self.foil_action),
            "text": self.text,
        }


class UsedNodeLedger:
    """Per-session record of splits already shown, with last-used step."""

    def __init__(self) -> None:
        self.last_used: dict[int, int] = {}

    def mark(self, node_id: int, step: int) -> None:
        self.last_used[node_id] = step

    def used(self, node_id: int) -> bool:
        return node_id in self.last_used

    def __len__(self) -> int:
        return len(self.last_used)


class UserModel:
    """Frequency table over discretised states, predicting the next action.

    Continuous features fall into equal-width bins over their declared
    ranges; rod features key on their level. Prediction returns the modal
    action of the state's cell, then the global modal action, then skip.
    Ties always break to the lowest action id.
    """

    def __init__(self, config: PlantConfig, bins: int = 5):
        if bins < 1:
            raise ValueError("bins must be at least 1")
        self.bins = bins
        low, high = feature_bounds(config)
        # interior bin edges for the 4 continuous features
        self.edges = [np.linspace(low[f], high[f], bins + 1)[1:-1] for f in range(4)]
        self.cells: dict[tuple[int, ...], np.ndarray] = {}
        self.global_counts = np.zeros(NUM_ACTIONS, dtype=int)

    def discretize(self, state: PlantState) -> tuple[int, ...]:
        features = feature_vector(state)
        key = [int(np.searchsorted(self.edges[f], features[f], side="right")) for f in range(4)]
        key.extend(int(features[f]) for f in range(4, 8))
        return tuple(key)

    def observe(self, state: PlantState, action: Action) -> None:
        key = self.discretize(state)
        if key not in self.cells:
            self.cells[key] = np.zeros(NUM_ACTIONS, dtype=int)
        self.cells[key][int(action)] += 1
        self.global_counts[int(action)] += 1

    def predict(self, state: PlantState) -> Action:
        counts = self.cells.get(self.discretize(state))
        if counts is not None and counts.sum() > 0:
            return Action(int(np.argmax(counts)))
        if self.global_counts.sum() > 0:
            return Action(int(np.argmax(self.global_counts)))
        return Action.SKIP


def answer_what(tree: DecisionTreePolicy, state: PlantState) -> Suggestion:
    """The advisor's action for this state; advisory only, never applied."""
    action, path = tree.best_action(feature_vector(state))
    return Suggestion(action=action, path=path, leaf_id=path.leaf_id)


def select_node_classical(path: DescentPath, ledger: UsedNodeLedger) -> int:
    """Shallowest on-path split not yet used; least-recently-used if all are."""
    if not path.steps:
        raise NoExplainableSplitError("fact path has no splits to explain")
    for step in path.steps:
        if not ledger.used(step.node_id):
            return step.node_id
    return min(path.steps, key=lambda s: ledger.last_used[s.node_id]).node_id


def nearest_foil_leaf(
    tree: DecisionTreePolicy, fact_leaf: int, foil: Action
) -> int | None:
    """Foil-advertising leaf whose path stays with the fact path longest.

    Among leaves whose greedy action is the foil, picks the one with the
    deepest divergence from the fact path (ties to the smaller leaf id);
    None when no leaf advertises the foil.
    """
    fact_path = tree.path_ids_to(fact_leaf)
    best_leaf = None
    best_depth = -1
    for leaf_id, _ in tree.leaves():
        if leaf_id == fact_leaf or tree.leaf_argmax(leaf_id) != foil:
            continue
        leaf_path = tree.path_ids_to(leaf_id)
        depth = 0
        for a, b in zip(fact_path, leaf_path):
            if a != b:
                break
            depth += 1
        if depth > best_depth:
            best_depth = depth
            best_leaf = leaf_id
    return best_leaf


def select_node_user_aware(tree: DecisionTreePolicy, fact_leaf: int, foil_leaf: int) -> int:
    """The split where the fact and foil paths diverge (their lowest common ancestor)."""
    if fact_leaf == foil_leaf:
        raise ExplainError("fact and foil leaves must differ")
    fact_path = tree.path_ids_to(fact_leaf)
    foil_path = tree.path_ids_to(foil_leaf)
    lca = None
    for a, b in zip(fact_path, foil_path):
        if a != b:
            break
        lca = a
    if lca is None or tree.is_leaf(lca):
        raise StructuralTreeError("fact and foil leaves share no ancestor split")
    return lca


def render_explanation(
    feature_index: int,
    op: str,
    value: float,
    mode: XaiMode,
    foil: Action | None = None,
) -> str:
    """Deterministic sentence for a split condition, contrastive in user-aware mode."""
    if feature_index not in FEATURE_PHRASES:
        raise ExplainError(f"unknown feature index {feature_index}")
    symbol = "≤" if op == OP_LE else ">"
    text = f"because {FEATURE_PHRASES[feature_index]} is {symbol} {value:g}{FEATURE_UNITS[feature_index]}"
    if mode == XaiMode.USER_AWARE:
        if foil is None:
            raise ExplainError("user-aware rendering requires a foil action")
        text += f" — that is why I would not {ACTION_PHRASES[foil]}"
    return text


def answer_why(
    tree: DecisionTreePolicy,
    state: PlantState,
    mode: XaiMode,
    ledger: UsedNodeLedger,
    user_model: UserModel,
) -> Explanation:
    """Justify the advisor's suggestion for this state.

    User-aware selection falls back to classical when the predicted action
    equals the suggestion or no leaf advertises it; a single-leaf tree
    yields the degenerate "no conditions were tested" explanation. The
    ledger records the shown split in both modes (it only constrains the
    classical choice).
    """
    suggestion = answer_what(tree, state)
    path = suggestion.path

    node_id: int | None = None
    foil: Action | None = None
    effective_mode = XaiMode.CLASSICAL
    if mode == XaiMode.USER_AWARE:
        predicted = user_model.predict(state)
        if predicted != suggestion.action:
            foil_leaf = nearest_foil_leaf(tree, suggestion.leaf_id, predicted)
            if foil_leaf is not None:
                node_id = select_node_user_aware(tree, suggestion.leaf_id, foil_leaf)
                foil = predicted
                effective_mode = XaiMode.USER_AWARE
    if node_id is None:
        try:
            node_id = select_node_classical(path, ledger)
        except NoExplainableSplitError:
            return Explanation(
                node_id=None,
                feature_index=None,
                threshold=None,
                op=None,
                mode=XaiMode.CLASSICAL,
                foil_action=None,
                text=NO_SPLIT_TEXT,
            )

    step = next(s for s in path.steps if s.node_id == node_id)
    text = render_explanation(step.feature, step.op, step.threshold, effective_mode, foil)
    ledger.mark(node_id, state.step_index)
    return Explanation(
        node_id=node_id,
        feature_index=step.feature,
        threshold=step.threshold,
        op=step.op,
        mode=effective_mode,
        foil_action=foil,
        text=text,
    )
