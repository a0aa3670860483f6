"""Train a small advisor tree and race it against random play.

The full 5000-episode run lives behind the `train` CLI subcommand; this
demo trains a quick 600-episode tree so it finishes in a few seconds.

Run: python3 demos/02_training_the_advisor.py
"""

from infopower import (
    CqiHyperparams,
    PlantConfig,
    expert_action,
    greedy_policy,
    mean_episode_energy,
    random_policy,
    train_cqi,
)
from infopower.treepolicy import policy_accuracy, rollout_episode, sample_states

config = PlantConfig()

print("training (600 episodes, seed 7)...")
tree = train_cqi(config, CqiHyperparams(episodes=600), seed=7)
print(f"tree has {tree.num_nodes()} nodes after {tree.metadata['splits']} splits\n")

greedy = mean_episode_energy(greedy_policy(tree), config, 50)
baseline = mean_episode_energy(random_policy(99), config, 50)
expert = rollout_episode(lambda s: expert_action(s, config), config)
print(f"{'greedy tree':<16}{greedy:>10.2f} energy/episode")
print(f"{'random play':<16}{baseline:>10.2f}")
print(f"{'scripted expert':<16}{expert:>10.2f}")

states = sample_states(config, 300, seed=1)
a_m = policy_accuracy(tree, states, lambda s: expert_action(s, config))
print(f"\nagreement with the scripted expert (a_m): {a_m:.3f}")

tree.save("/tmp/demo_tree.json")
print("saved to /tmp/demo_tree.json; try:")
print("  infopower eval --tree /tmp/demo_tree.json")
