"""From quiz sheets to the information-power score.

Run: python3 demos/04_scoring_information_power.py
"""

from infopower import (
    empirical_weights,
    information_power,
    information_power_user,
    load_default_catalog,
    score_quiz,
    uniform_weights,
)

catalog = load_default_catalog()
totals = catalog.rules_per_feature()
print(f"catalog: {len(catalog.rules)} rules over {catalog.feature_count} features "
      f"({totals.tolist()} per feature)\n")

# a user who answered the two water items and one security item correctly
answers = {}
for rule in catalog.rules_for_feature(2) + catalog.rules_for_feature(4)[:1]:
    item = catalog.quiz_item_for_rule(rule.rule_id)
    answers[item.item_id] = item.answer
score = score_quiz(answers, catalog)
print(f"learned per feature: {list(score.learned_per_feature)}")

a_m = 0.9
weights = uniform_weights(catalog.feature_count)
ip_one = information_power_user(a_m, weights, score.learned_per_feature, catalog)
print(f"their score with uniform weights and a_m={a_m}: {ip_one:.4f}\n")

# empirical weights: features users needed more exchanges to grasp weigh more
interactions = [12, 2, 30, 4, 8, 8, 6, 10]
weights = empirical_weights(interactions)
print(f"interaction counts {interactions}")
print(f"empirical weights  {[round(float(w), 3) for w in weights]}")
ip_emp = information_power_user(a_m, weights, score.learned_per_feature, catalog)
print(f"same sheet under empirical weights: {ip_emp:.4f}\n")

cohort = [ip_one, 0.0, 0.31, 0.62]
print(f"cohort scores {[round(v, 3) for v in cohort]} "
      f"-> advisor information power {information_power(cohort):.4f}")
