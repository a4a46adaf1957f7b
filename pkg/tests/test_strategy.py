import pytest

from covert_game.belief import Belief
from covert_game.presets import BINARY_MALICIOUS_PAYOFFS, binary_document
from covert_game.strategy import (ReactionRule, benign_action_policy,
                                  default_grid, modeled_reaction_rule,
                                  receiver_reaction, sender_expected_utility,
                                  single_crossing, solve_stage, stage_actions,
                                  stage_threshold, verify_stage_policy)
from tests.conftest import PI_STAR, build


def constant_rule(r):
    return ReactionRule(table=((0, r), (1, r)))


# === Receptor ===

@pytest.mark.parametrize("posterior, reaction", [(0.9, 1), (0.5, 0), (0.85, 1), (0.8499, 0)])
def test_receiver_reaction_threshold(scenario, posterior, reaction):
    assert receiver_reaction(Belief(posterior), 0, 1, scenario) == reaction


def test_receiver_tie_goes_to_first_reaction(document):
    for entry in document["utility_receiver"]:
        entry[4] = 0.0
    s = build(document)
    assert receiver_reaction(Belief(0.3), 0, 1, s) == s.alphabets.r.label(0)


def test_modeled_rule_low_estimate(scenario):
    rule = modeled_reaction_rule(0.15, 0, 1, scenario)
    assert rule.as_dict() == {0: 0, 1: 0}
    assert rule.is_constant


def test_modeled_rule_high_estimate(scenario):
    rule = modeled_reaction_rule(0.84, 0, 1, scenario)
    assert rule[1] == 1
    assert rule[0] == 0


def test_modeled_rule_for_benign_candidate_is_constant(scenario):
    for pi_hat in (0.1, 0.84, 0.95):
        assert modeled_reaction_rule(pi_hat, 1, 0, scenario).is_constant


def test_reaction_rule_unknown_observation():
    with pytest.raises(KeyError):
        constant_rule(0)[5]


# === Emisor ===

def test_sender_utility_against_constant_rules(scenario):
    assert sender_expected_utility(1, constant_rule(0), 0, scenario) == pytest.approx(3.0)
    assert sender_expected_utility(1, constant_rule(1), 0, scenario) == pytest.approx(0.0)
    assert sender_expected_utility(0, constant_rule(1), 0, scenario) == pytest.approx(1.0)


def test_sender_utility_mixed_rule(scenario):
    rule = ReactionRule(table=((0, 0), (1, 1)))
    assert sender_expected_utility(1, rule, 0, scenario) == pytest.approx(0.45 * 3 + 0.55 * 0, abs=1e-12)


def test_solve_stage_low_estimate_attacks(scenario):
    policy = solve_stage(0.15, 0, scenario)
    assert policy.malicious_action == 1
    assert policy.fixed_point_found
    assert policy.sender_value == pytest.approx(3.0)
    assert verify_stage_policy(policy, 0, scenario)


def test_solve_stage_high_estimate_is_benign(scenario):
    for u in (0, 1):
        policy = solve_stage(0.90, u, scenario)
        assert policy.malicious_action == 0
        assert policy.fixed_point_found
        assert policy.modeled_reactions.as_dict() == {0: 1, 1: 1}
        assert verify_stage_policy(policy, u, scenario)


def test_solve_stage_without_pure_fixed_point_falls_back(scenario):
    policy = solve_stage(0.83, 0, scenario)
    assert not policy.fixed_point_found
    assert policy.malicious_action == scenario.benign_action


def test_benign_action_policy(scenario):
    assert benign_action_policy(scenario) == 0


# === Umbral ===

def test_threshold_near_switch_level(scenario):
    for u in (0, 1):
        assert stage_threshold(scenario, u) == pytest.approx(PI_STAR, abs=1e-4)


def test_single_crossing_both_inputs(scenario):
    grid = default_grid(2_000)
    for u in (0, 1):
        assert single_crossing(scenario, u, grid)
        actions = stage_actions(scenario, u, grid)
        assert actions[0] == 1 and actions[-1] == 0


def test_no_threshold_when_action_never_changes(document):
    document["utility_sender"] = [e if e[0] == "benign" or e[2] == 0 else [*e[:4], -1.0]
                                  for e in document["utility_sender"]]
    s = build(document)
    assert stage_threshold(s, 0, default_grid(200)) is None


def test_argmax_invariant_under_affine_payoffs(scenario):
    shifted = {k: 2.5 * v + 7.0 for k, v in BINARY_MALICIOUS_PAYOFFS.items()}
    other = build(binary_document(malicious_payoffs=shifted))
    grid = default_grid(500)
    for u in (0, 1):
        assert stage_actions(other, u, grid) == stage_actions(scenario, u, grid)
