"""Shared generators and independent oracles for the tree tests.

The oracles deliberately re-derive answers from first principles
(region enumeration, exhaustive scans, parent chains) so they stay
independent of the tree code they check.
"""

from __future__ import annotations

import math

import numpy as np

from infopower.plantsim import NUM_ACTIONS, NUM_FEATURES, PlantConfig, feature_bounds
from infopower.treepolicy import DecisionTreePolicy, Leaf, Split

BOUNDS = feature_bounds(PlantConfig())


def random_tree(rng: np.random.Generator, max_depth: int = 5, split_prob: float = 0.75) -> DecisionTreePolicy:
    """Random policy tree with thresholds nested inside each branch's box."""
    low, high = BOUNDS

    def build(depth: int, lo: np.ndarray, hi: np.ndarray):
        if depth >= max_depth or rng.random() > split_prob:
            return Leaf(q=rng.normal(size=NUM_ACTIONS))
        f = int(rng.integers(NUM_FEATURES))
        t = float(lo[f] + (hi[f] - lo[f]) * rng.uniform(0.2, 0.8))
        left_hi = hi.copy()
        left_hi[f] = t
        right_lo = lo.copy()
        right_lo[f] = t
        return Split(f, t, build(depth + 1, lo, left_hi), build(depth + 1, right_lo, hi))

    return DecisionTreePolicy(build(0, low.copy(), high.copy()))


def random_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    low, high = BOUNDS
    return low + rng.random((n, NUM_FEATURES)) * (high - low)


def leaf_boxes(tree: DecisionTreePolicy) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """(leaf id, open lower bound, closed upper bound) per leaf region."""
    boxes = []

    def walk(node, lo, hi):
        if isinstance(node, Leaf):
            boxes.append((tree.node_id_of(node), lo, hi))
            return
        left_hi = hi.copy()
        left_hi[node.feature] = min(hi[node.feature], node.threshold)
        right_lo = lo.copy()
        right_lo[node.feature] = max(lo[node.feature], node.threshold)
        walk(node.left, lo, left_hi)
        walk(node.right, right_lo, hi)

    inf = np.full(NUM_FEATURES, math.inf)
    walk(tree.root, -inf.copy(), inf.copy())
    return boxes


def oracle_region_lookup(boxes, vector: np.ndarray) -> int:
    """The unique leaf whose (lo, hi] box contains the vector."""
    hits = [
        leaf_id
        for leaf_id, lo, hi in boxes
        if np.all(vector > lo) and np.all(vector <= hi)
    ]
    assert len(hits) == 1, f"vector fell into {len(hits)} regions"
    return hits[0]


def oracle_argmax(q) -> int:
    """First index attaining the maximum, found by explicit scan."""
    best = 0
    for i in range(1, len(q)):
        if q[i] > q[best]:
            best = i
    return best


def oracle_lca(tree: DecisionTreePolicy, a: int, b: int) -> int:
    """Lowest common ancestor via parent chains."""
    ancestors = set()
    node: int | None = a
    while node is not None:
        ancestors.add(node)
        node = tree.parent_id(node)
    node = b
    while node is not None:
        if node in ancestors:
            return node
        node = tree.parent_id(node)
    raise AssertionError("nodes share no ancestor")


def oracle_nearest_foil(tree: DecisionTreePolicy, fact_leaf: int, foil) -> int | None:
    """Exhaustive scan for the foil leaf with the deepest shared prefix."""
    fact_path = tree.path_ids_to(fact_leaf)
    candidates = []
    for leaf_id, leaf in tree.leaves():
        if leaf_id == fact_leaf or oracle_argmax(leaf.q) != int(foil):
            continue
        path = tree.path_ids_to(leaf_id)
        shared = 0
        for x, y in zip(fact_path, path):
            if x != y:
                break
            shared += 1
        candidates.append((-shared, leaf_id))
    if not candidates:
        return None
    candidates.sort()
    return candidates[0][1]
