"""Reactor-management decision task, tree advisor, and information-power assessment."""

from .plantsim import (
    Action,
    Event,
    PlantConfig,
    PlantConfigError,
    PlantState,
    RodBank,
    RodLevel,
    StepOutcome,
    TerminalStateError,
    apply_action,
    feature_vector,
    fission_active,
    new_plant,
    state_from_features,
)
from .treepolicy import (
    CqiHyperparams,
    DecisionTreePolicy,
    DescentPath,
    Leaf,
    Split,
    expert_action,
    greedy_policy,
    mean_episode_energy,
    policy_accuracy,
    random_policy,
    train_cqi,
)
from .explain import (
    Explanation,
    Suggestion,
    UsedNodeLedger,
    UserModel,
    XaiMode,
    answer_what,
    answer_why,
    nearest_foil_leaf,
    render_explanation,
    select_node_classical,
    select_node_user_aware,
)
from .fixtures import build_four_split_tree, build_reference_tree
from .metrics import (
    InteractionEvent,
    IPReport,
    QuizScore,
    RuleCatalog,
    attribute_interaction,
    empirical_weights,
    information_power,
    information_power_user,
    load_default_catalog,
    score_quiz,
    uniform_weights,
)

__version__ = "0.1.0"
