"""Hand-built trees: the four-split contrastive example and the reference advisor.

Node ids follow depth-first preorder from 1, the numbering the rest of
the package uses everywhere.
"""

from __future__ import annotations

import numpy as np

from .plantsim import NUM_ACTIONS, Action
from .treepolicy import DecisionTreePolicy, Leaf, Split


def _leaf(best: Action, value: float = 10.0) -> Leaf:
    q = np.zeros(NUM_ACTIONS)
    q[int(best)] = value
    return Leaf(q=q)


def build_four_split_tree() -> DecisionTreePolicy:
    """Four-split tree with fact leaf 5 (add water) and foil leaf 7 (skip).

    Preorder layout: splits 1-4 chain down the left spine; the add-water
    leaf (5) and the skip leaf (7) diverge at node 3, whose test is the
    low-water condition. With node 1 already used, classical selection
    yields node 2; fact 5 vs foil 7 yields node 3.
    """
    node4 = Split(feature=1, threshold=405.0, left=_leaf(Action.ADD_WATER), right=_leaf(Action.REGULATORY_UP))
    node3 = Split(feature=2, threshold=25.0, left=node4, right=_leaf(Action.SKIP))
    node2 = Split(feature=0, threshold=810.0, left=node3, right=_leaf(Action.SECURITY_DOWN))
    node1 = Split(feature=3, threshold=500.0, left=node2, right=_leaf(Action.SECURITY_DOWN))
    return DecisionTreePolicy(node1, metadata={"name": "four-split-example"})


def build_reference_tree() -> DecisionTreePolicy:
    """Expert-like advisor tree shipped for sessions, demos and fixtures.

    Mirrors the scripted expert: shut down when hot, refill when low,
    start fission safely, then keep sustain and regulatory rods down.
    """
    reg = Split(
        feature=7,
        threshold=1.0,
        left=_leaf(Action.REGULATORY_DOWN),
        right=_leaf(Action.SKIP),
    )
    sustain = Split(feature=6, threshold=1.0, left=_leaf(Action.SUSTAIN_DOWN), right=reg)
    fuel = Split(feature=5, threshold=1.0, left=_leaf(Action.FUEL_DOWN), right=sustain)
    security = Split(feature=4, threshold=1.0, left=fuel, right=_leaf(Action.SECURITY_UP))
    water = Split(feature=2, threshold=25.0, left=_leaf(Action.ADD_WATER), right=security)
    root = Split(feature=0, threshold=810.0, left=water, right=_leaf(Action.SECURITY_DOWN))
    return DecisionTreePolicy(root, metadata={"name": "reference-advisor"})
