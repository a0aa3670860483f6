"""Decision-tree advisor policy and its reinforcement-learning trainer.

The advisor is a binary tree over the 8 plant features: internal nodes
test ``feature <= threshold`` (left) vs ``> threshold`` (right), leaves
hold one expected Q-value per action. Training grows the tree online:
every leaf keeps visit-weighted Q estimates for a fixed set of candidate
splits and splits only when the best candidate's expected improvement
clears a decaying threshold (conservative growth).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .plantsim import (
    NUM_ACTIONS,
    NUM_FEATURES,
    Action,
    PlantConfig,
    PlantState,
    RodLevel,
    apply_action,
    feature_bounds,
    feature_vector,
    new_plant,
    state_from_features,
)

TREE_SCHEMA = "tree-policy/1"

OP_LE = "<="
OP_GT = ">"


class TreeError(Exception):
    pass


class StructuralTreeError(TreeError):
    """The tree violates its shape invariants (dangling child, bad ids)."""


class Leaf:
    __slots__ = ("q", "visits")

    def __init__(self, q: np.ndarray | None = None, visits: int = 0):
        self.q = np.zeros(NUM_ACTIONS) if q is None else np.asarray(q, dtype=float)
        if self.q.shape != (NUM_ACTIONS,):
            raise StructuralTreeError(f"leaf Q array must have {NUM_ACTIONS} entries")
        self.visits = visits


class Split:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = int(feature)
        self.threshold = float(threshold)
        self.left = left
        self.right = right


@dataclass(frozen=True)
class PathStep:
    node_id: int
    feature: int
    threshold: float
    op: str  # OP_LE if the descent went left, OP_GT if right


@dataclass(frozen=True)
class DescentPath:
    steps: tuple[PathStep, ...]
    leaf_id: int

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(s.node_id for s in self.steps)


class DecisionTreePolicy:
    """Immutable query view of a tree, with stable depth-first node ids.

    Ids are assigned in depth-first preorder starting from 1 (root), so a
    node's id is stable across serialisation round-trips.
    """

    def __init__(self, root, metadata: dict | None = None):
        self.root = root
        self.metadata = dict(metadata or {})
        self._nodes: list = []
        self._parents: dict[int, int | None] = {}
        self._ids: dict[int, int] = {}  # id(node object) -> node id
        self._index(root, None)

    def _index(self, node, parent_id: int | None) -> None:
        if node is None:
            raise StructuralTreeError("dangling child reference in tree")
        self._nodes.append(node)
        node_id = len(self._nodes)
        self._ids[id(node)] = node_id
        self._parents[node_id] = parent_id
        if isinstance(node, Split):
            self._index(node.left, node_id)
            self._index(node.right, node_id)
        elif not isinstance(node, Leaf):
            raise StructuralTreeError(f"unknown node type {type(node).__name__}")

    # -- structure queries -------------------------------------------------

    def node(self, node_id: int):
        if not 1 <= node_id <= len(self._nodes):
            raise StructuralTreeError(f"node id {node_id} not in tree")
        return self._nodes[node_id - 1]

    def node_id_of(self, node) -> int:
        return self._ids[id(node)]

    def parent_id(self, node_id: int) -> int | None:
        self.node(node_id)
        return self._parents[node_id]

    def is_leaf(self, node_id: int) -> bool:
        return isinstance(self.node(node_id), Leaf)

    def num_nodes(self) -> int:
        return len(self._nodes)

    def leaves(self) -> Iterator[tuple[int, Leaf]]:
        for i, node in enumerate(self._nodes, start=1):
            if isinstance(node, Leaf):
                yield i, node

    def path_ids_to(self, node_id: int) -> list[int]:
        """Node ids from the root down to node_id, inclusive."""
        chain = []
        current: int | None = node_id
        while current is not None:
            chain.append(current)
            current = self._parents[current]
        chain.reverse()
        return chain

    # -- policy queries ----------------------------------------------------

    def descend(self, features: np.ndarray) -> DescentPath:
        """Route a feature vector from the root to its leaf."""
        features = np.asarray(features, dtype=float)
        if features.shape != (NUM_FEATURES,):
            raise TreeError(f"expected {NUM_FEATURES} features, got shape {features.shape}")
        node = self.root
        steps: list[PathStep] = []
        while isinstance(node, Split):
            node_id = self._ids[id(node)]
            if features[node.feature] <= node.threshold:
                steps.append(PathStep(node_id, node.feature, node.threshold, OP_LE))
                node = node.left
            else:
                steps.append(PathStep(node_id, node.feature, node.threshold, OP_GT))
                node = node.right
            if node is None:
                raise StructuralTreeError("dangling child reference in tree")
        return DescentPath(steps=tuple(steps), leaf_id=self._ids[id(node)])

    def best_action(self, features: np.ndarray) -> tuple[Action, DescentPath]:
        """Greedy action at the routed leaf; ties break to the lowest action id."""
        path = self.descend(features)
        leaf = self.node(path.leaf_id)
        return Action(int(np.argmax(leaf.q))), path

    def leaf_argmax(self, leaf_id: int) -> Action:
        leaf = self.node(leaf_id)
        if not isinstance(leaf, Leaf):
            raise StructuralTreeError(f"node {leaf_id} is not a leaf")
        return Action(int(np.argmax(leaf.q)))

    # -- serialisation -----------------------------------------------------

    def to_json_dict(self) -> dict:
        nodes = []
        for node_id, node in enumerate(self._nodes, start=1):
            if isinstance(node, Split):
                nodes.append(
                    {
                        "id": node_id,
                        "kind": "split",
                        "feature": node.feature,
                        "threshold": node.threshold,
                        "left": self._ids[id(node.left)],
                        "right": self._ids[id(node.right)],
                    }
                )
            else:
                nodes.append(
                    {
                        "id": node_id,
                        "kind": "leaf",
                        "q": [float(v) for v in node.q],
                        "visits": int(node.visits),
                    }
                )
        return {"schema": TREE_SCHEMA, "metadata": self.metadata, "nodes": nodes}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DecisionTreePolicy":
        if doc.get("schema") != TREE_SCHEMA:
            raise StructuralTreeError(f"unsupported tree schema {doc.get('schema')!r}")
        by_id = {int(n["id"]): n for n in doc["nodes"]}
        if len(by_id) != len(doc["nodes"]):
            raise StructuralTreeError("duplicate node ids in tree document")

        def build(node_id: int):
            node_doc = by_id.get(node_id)
            if node_doc is None:
                raise StructuralTreeError(f"node id {node_id} referenced but missing")
            if node_doc["kind"] == "leaf":
                return Leaf(q=np.array(node_doc["q"], dtype=float), visits=int(node_doc.get("visits", 0)))
            return Split(
                feature=int(node_doc["feature"]),
                threshold=float(node_doc["threshold"]),
                left=build(int(node_doc["left"])),
                right=build(int(node_doc["right"])),
            )

        policy = cls(build(1), metadata=doc.get("metadata", {}))
        if policy.num_nodes() != len(by_id):
            raise StructuralTreeError("unreachable nodes in tree document")
        return policy

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_canonical_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DecisionTreePolicy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def policy_accuracy(
    tree: DecisionTreePolicy,
    eval_states: list[PlantState],
    reference: Callable[[PlantState], Action],
) -> float:
    """Agreement rate between the tree and a reference policy."""
    if not eval_states:
        raise ValueError("eval_states must be non-empty")
    agree = 0
    for state in eval_states:
        action, _ = tree.best_action(feature_vector(state))
        if action == reference(state):
            agree += 1
    return agree / len(eval_states)


# ---------------------------------------------------------------------------
# Conservative tree-growing Q-learner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CqiHyperparams:
    discount: float = 0.99
    learning_rate: float = 0.05
    split_threshold: float = 5.0
    split_decay: float = 0.999
    candidate_thresholds: int = 9
    max_depth: int = 8
    episodes: int = 5000
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    # visits a fresh leaf collects before its candidate thresholds freeze
    candidate_warmup: int = 50
    damage_penalty: float = 500.0

    def validate(self) -> None:
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.split_threshold <= 0.0:
            raise ValueError(f"split_threshold must be positive, got {self.split_threshold}")
        if not 0.0 < self.split_decay < 1.0:
            raise ValueError(f"split_decay must lie in (0, 1), got {self.split_decay}")
        if self.candidate_thresholds < 1:
            raise ValueError("candidate_thresholds must be at least 1")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be at least 1, got {self.max_depth}")
        if self.episodes < 0:
            raise ValueError(f"episodes must be non-negative, got {self.episodes}")
        if not 0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0:
            raise ValueError("epsilon schedule must satisfy 0 <= epsilon_min <= epsilon_start <= 1")
        if self.candidate_warmup < 1:
            raise ValueError("candidate_warmup must be at least 1")

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


# rod features take 2 or 3 discrete levels; candidates sit between adjacent ones
_DISCRETE_CANDIDATES = {4: (1.0,), 5: (1.0,), 6: (0.5, 1.5), 7: (0.5, 1.5)}


class _TrainingLeaf:
    __slots__ = (
        "q",
        "visits",
        "depth",
        "obs",
        "frozen",
        "cand_features",
        "cand_thresholds",
        "cand_q",
        "cand_visits",
    )

    def __init__(self, q: np.ndarray, depth: int, visits: int = 0):
        self.q = q
        self.visits = visits
        self.depth = depth
        self.obs: list[np.ndarray] = []
        self.frozen = False
        self.cand_features: np.ndarray | None = None
        self.cand_thresholds: np.ndarray | None = None
        self.cand_q: np.ndarray | None = None
        self.cand_visits: np.ndarray | None = None

    def freeze_candidates(self, n_continuous: int) -> None:
        obs = np.array(self.obs)
        features: list[int] = []
        thresholds: list[float] = []
        quantiles = np.linspace(0.0, 1.0, n_continuous + 2)[1:-1]
        for f in range(NUM_FEATURES):
            if f in _DISCRETE_CANDIDATES:
                for t in _DISCRETE_CANDIDATES[f]:
                    features.append(f)
                    thresholds.append(t)
            else:
                for t in np.quantile(obs[:, f], quantiles):
                    features.append(f)
                    thresholds.append(float(t))
        self.cand_features = np.array(features, dtype=int)
        self.cand_thresholds = np.array(thresholds)
        n = len(features)
        self.cand_q = np.tile(self.q, (n, 2, 1)).astype(float)
        self.cand_visits = np.zeros((n, 2), dtype=int)
        self.obs = []
        self.frozen = True


class _CqiTrainer:
    def __init__(self, config: PlantConfig, hp: CqiHyperparams, seed: int):
        self.config = config
        self.hp = hp
        self.rng = np.random.default_rng(seed)
        self.root: Split | _TrainingLeaf = _TrainingLeaf(np.zeros(NUM_ACTIONS), depth=0)
        self.split_threshold = hp.split_threshold
        self.splits_performed = 0

    def _descend(self, features: np.ndarray) -> tuple[_TrainingLeaf, Split | None, bool]:
        node = self.root
        parent: Split | None = None
        went_left = False
        while isinstance(node, Split):
            parent = node
            went_left = features[node.feature] <= node.threshold
            node = node.left if went_left else node.right
        return node, parent, went_left

    def _leaf_value(self, features: np.ndarray) -> float:
        leaf, _, _ = self._descend(features)
        return float(leaf.q.max())

    def _update_leaf(self, leaf: _TrainingLeaf, features: np.ndarray, action: int, target: float) -> None:
        lr = self.hp.learning_rate
        leaf.q[action] += lr * (target - leaf.q[action])
        leaf.visits += 1
        if not leaf.frozen:
            leaf.obs.append(features.copy())
            if len(leaf.obs) >= self.hp.candidate_warmup:
                leaf.freeze_candidates(self.hp.candidate_thresholds)
            return
        sides = (features[leaf.cand_features] > leaf.cand_thresholds).astype(int)
        idx = np.arange(len(sides))
        current = leaf.cand_q[idx, sides, action]
        leaf.cand_q[idx, sides, action] = current + lr * (target - current)
        leaf.cand_visits[idx, sides] += 1

    def _maybe_split(self, leaf: _TrainingLeaf, parent: Split | None, went_left: bool) -> bool:
        if not leaf.frozen or leaf.depth >= self.hp.max_depth:
            self.split_threshold *= self.hp.split_decay
            return False
        totals = leaf.cand_visits.sum(axis=1)
        weights = leaf.cand_visits / np.maximum(totals, 1)[:, None]
        child_best = leaf.cand_q.max(axis=2)  # (n_candidates, 2)
        improvement = (weights * child_best).sum(axis=1) - float(leaf.q.max())
        best = int(np.argmax(improvement))
        if improvement[best] <= self.split_threshold:
            self.split_threshold *= self.hp.split_decay
            return False
        split = Split(
            feature=int(leaf.cand_features[best]),
            threshold=float(leaf.cand_thresholds[best]),
            left=_TrainingLeaf(
                leaf.cand_q[best, 0].copy(), leaf.depth + 1, int(leaf.cand_visits[best, 0])
            ),
            right=_TrainingLeaf(
                leaf.cand_q[best, 1].copy(), leaf.depth + 1, int(leaf.cand_visits[best, 1])
            ),
        )
        if parent is None:
            self.root = split
        elif went_left:
            parent.left = split
        else:
            parent.right = split
        self.split_threshold = self.hp.split_threshold
        self.splits_performed += 1
        return True

    def run(self) -> None:
        hp = self.hp
        episodes = hp.episodes
        for episode in range(episodes):
            if episodes > 1:
                frac = episode / (episodes - 1)
            else:
                frac = 1.0
            epsilon = hp.epsilon_start + (hp.epsilon_min - hp.epsilon_start) * frac
            state = new_plant(self.config)
            while True:
                features = feature_vector(state)
                leaf, parent, went_left = self._descend(features)
                if self.rng.random() < epsilon:
                    action = int(self.rng.integers(NUM_ACTIONS))
                else:
                    action = int(np.argmax(leaf.q))
                outcome = apply_action(state, Action(action), self.config)
                next_state = outcome.next_state
                reward = outcome.energy_produced
                if next_state.damaged:
                    reward -= hp.damage_penalty
                    future = 0.0
                else:
                    future = self._leaf_value(feature_vector(next_state))
                target = reward + hp.discount * future
                self._update_leaf(leaf, features, action, target)
                self._maybe_split(leaf, parent, went_left)
                state = next_state
                if state.damaged or state.step_index >= self.config.episode_steps:
                    break

    def freeze(self, seed: int) -> DecisionTreePolicy:
        def convert(node):
            if isinstance(node, Split):
                return Split(node.feature, node.threshold, convert(node.left), convert(node.right))
            return Leaf(q=node.q.copy(), visits=node.visits)

        metadata = {
            "algorithm": "conservative-split-q",
            "seed": seed,
            "hyperparams": self.hp.to_json_dict(),
            "splits": self.splits_performed,
        }
        return DecisionTreePolicy(convert(self.root), metadata=metadata)


def train_cqi(config: PlantConfig, hp: CqiHyperparams, seed: int) -> DecisionTreePolicy:
    """Train the advisor tree on the plant; all randomness comes from seed.

    Reward per step is the energy banked minus a flat penalty if the step
    damages the plant. With ``episodes=0`` the initial single-leaf tree is
    returned untrained.
    """
    hp.validate()
    config.validate()
    trainer = _CqiTrainer(config, hp, seed)
    trainer.run()
    return trainer.freeze(seed)


# ---------------------------------------------------------------------------
# Evaluation helpers and the scripted reference expert
# ---------------------------------------------------------------------------


def rollout_episode(
    policy: Callable[[PlantState], Action], config: PlantConfig
) -> float:
    """Total energy banked over one episode under the given policy."""
    state = new_plant(config)
    while not state.damaged and state.step_index < config.episode_steps:
        outcome = apply_action(state, policy(state), config)
        state = outcome.next_state
    return state.energy_total


def greedy_policy(tree: DecisionTreePolicy) -> Callable[[PlantState], Action]:
    return lambda state: tree.best_action(feature_vector(state))[0]


def mean_episode_energy(
    policy: Callable[[PlantState], Action], config: PlantConfig, episodes: int
) -> float:
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    return float(np.mean([rollout_episode(policy, config) for _ in range(episodes)]))


def random_policy(seed: int) -> Callable[[PlantState], Action]:
    rng = np.random.default_rng(seed)
    return lambda state: Action(int(rng.integers(NUM_ACTIONS)))


def expert_action(state: PlantState, config: PlantConfig) -> Action:
    """Hand-written reference operator: safe start, refills, thermal cycling."""
    if state.damaged:
        return Action.SKIP
    hot = state.temperature > 0.9 * config.t_crit or state.pressure > 0.9 * config.p_crit
    cooled = state.temperature < 0.5 * config.t_crit and state.pressure < 0.5 * config.p_crit
    if hot:
        if state.rods.security == RodLevel.UP:
            return Action.SECURITY_DOWN
        return Action.SKIP
    if state.rods.security == RodLevel.DOWN:
        if cooled:
            return Action.SECURITY_UP
        return Action.SKIP
    if state.water_level <= config.low_water_threshold:
        return Action.ADD_WATER
    if state.rods.fuel != RodLevel.DOWN:
        return Action.FUEL_DOWN
    if state.rods.sustain != RodLevel.DOWN:
        return Action.SUSTAIN_DOWN
    if state.rods.regulatory != RodLevel.DOWN:
        return Action.REGULATORY_DOWN
    return Action.SKIP


def sample_states(config: PlantConfig, n: int, seed: int) -> list[PlantState]:
    """Random reachable-ish states drawn uniformly from the feature box."""
    rng = np.random.default_rng(seed)
    low, high = feature_bounds(config)
    states = []
    for _ in range(n):
        features = low + rng.random(NUM_FEATURES) * (high - low)
        features[4] = float(rng.choice([0.0, 2.0]))
        features[5] = float(rng.choice([0.0, 2.0]))
        features[6] = float(rng.integers(3))
        features[7] = float(rng.integers(3))
        states.append(state_from_features(features))
    return states
