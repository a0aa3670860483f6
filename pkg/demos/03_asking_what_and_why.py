"""The two explanation-selection strategies, side by side.

A user keeps skipping; the advisor wants to add water. The classical
strategy explains with the shallowest split it has not used yet; the
user-aware one predicts the user's skip, finds the closest skip-leaf,
and explains the exact condition separating the two.

Run: python3 demos/03_asking_what_and_why.py
"""

from infopower import (
    Action,
    PlantConfig,
    PlantState,
    RodBank,
    RodLevel,
    UsedNodeLedger,
    UserModel,
    XaiMode,
    answer_what,
    answer_why,
    build_four_split_tree,
)

config = PlantConfig()
tree = build_four_split_tree()

state = PlantState(
    temperature=300.0,
    pressure=10.0,
    water_level=20.0,
    power=200.0,
    rods=RodBank(security=RodLevel.UP, fuel=RodLevel.DOWN),
)

suggestion = answer_what(tree, state)
print(f"user: what would you do?")
print(f"advisor: I would {suggestion.action.name.lower()}  "
      f"(leaf {suggestion.leaf_id}, path {list(suggestion.path.node_ids)})\n")

# the user model has watched this user skip three times in this situation
model = UserModel(config)
for _ in range(3):
    model.observe(state, Action.SKIP)

ledger = UsedNodeLedger()
ledger.mark(1, step=0)  # pretend the root condition was already explained

classical = answer_why(tree, state, XaiMode.CLASSICAL, ledger, model)
print(f"user: why?")
print(f"advisor (classical, node {classical.node_id}): {classical.text}\n")

user_aware = answer_why(tree, state, XaiMode.USER_AWARE, UsedNodeLedger(), model)
print(f"advisor (user-aware, node {user_aware.node_id}): {user_aware.text}")
print(f"  fact leaf 5 (add water) vs foil leaf 7 ({user_aware.foil_action.name.lower()}): "
      "the selected node is where their paths part ways")
