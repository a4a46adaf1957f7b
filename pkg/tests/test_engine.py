import numpy as np
import pytest

from covert_game.engine import (StepRecord, Trajectory, assumption5_monitor,
                                constant_after_convergence, convergence_step,
                                initial_state, monotonicity_audit, oracle_audit,
                                run_monte_carlo, run_path, step_game,
                                trial_seed)
from covert_game.errors import ScenarioInvalidError
from covert_game.presets import binary_document
from tests.conftest import PI0, build

PI_HAT_1 = 0.55 * (0.0825 / 0.465) + 0.45 * (0.0675 / 0.535)


@pytest.fixture(scope="module")
def benign_only():
    # Atacar nunca compensa: el emisor malicioso juega siempre a_b
    payoffs = {(1, 0): 0.0, (0, 0): 2.0, (0, 1): 1.0, (1, 1): 0.0}
    return build(binary_document(malicious_payoffs=payoffs, horizon=40))


def make_trajectory(pi_hats, actions, pi0=PI0):
    records = [StepRecord(k=k, u=0, action=a, x=a, y=0, pi_true=p, pi_hat=p, reaction=0, fixed_point=True)
               for k, (p, a) in enumerate(zip(pi_hats, actions))]
    return Trajectory(initial_belief=pi0, benign_action=0, horizon=len(records), records=records,
                      convergence_step=convergence_step(records, 0))


# === step_game ===

def test_forced_first_step(scenario):
    state, record = step_game(initial_state(scenario, 0), scenario, forced_u=0, forced_y=1)
    assert record.action == 1
    assert record.x == 1
    assert record.pi_true == pytest.approx(0.0825 / 0.465, abs=1e-12)
    assert record.pi_hat == pytest.approx(PI_HAT_1, abs=1e-12)
    assert record.reaction == 0
    assert record.fixed_point
    assert state.k == 1
    assert state.true_belief.malicious_mass == record.pi_true


def test_seeded_steps_are_reproducible(scenario):
    a = step_game(initial_state(scenario, 9), scenario)[1]
    b = step_game(initial_state(scenario, 9), scenario)[1]
    assert a == b


# === run_path ===

def test_run_path_is_deterministic(scenario):
    assert run_path(scenario, seed=42).records == run_path(scenario, seed=42).records


def test_run_path_converges_and_freezes(scenario):
    t = run_path(scenario, seed=42)
    assert len(t.records) == 500
    assert t.convergence_step is not None
    assert constant_after_convergence(t)
    assert all(a == 0 for a in t.actions[t.convergence_step:])
    assert monotonicity_audit(t).ok


def test_zero_horizon(scenario):
    t = run_path(scenario, horizon=0)
    assert t.records == []
    assert t.convergence_step is None


def test_invalid_scenario_refused():
    s = build(binary_document(lam=0.5))
    with pytest.raises(ScenarioInvalidError) as info:
        run_path(s)
    assert "channel_informativeness" in str(info.value)


def test_benign_sender_keeps_beliefs_constant(benign_only):
    t = run_path(benign_only, seed=3)
    assert set(t.actions) == {0}
    assert all(p == PI0 for p in t.pi_true_column)
    assert all(p == PI0 for p in t.pi_hat_column)
    assert t.convergence_step == 0
    audit = monotonicity_audit(t)
    assert audit.ok
    assert audit.equality_steps == 40
    assert assumption5_monitor(t).holds


def test_convergence_step_needs_benign_tail():
    assert convergence_step([], 0) is None
    t = make_trajectory([0.2, 0.3, 0.3], [1, 0, 0])
    assert t.convergence_step == 1
    t = make_trajectory([0.2, 0.3], [0, 1])
    assert t.convergence_step is None


# === auditorías ===

def test_monotonicity_flags_decrease():
    t = make_trajectory([0.2, 0.3, 0.25, 0.4], [1, 1, 1, 1])
    audit = monotonicity_audit(t)
    assert not audit.ok
    assert [(v.step, v.kind) for v in audit.violations] == [(2, "decrease")]


def test_monotonicity_flags_benign_change_and_flat_attack():
    t = make_trajectory([0.2, 0.25, 0.25], [1, 0, 1])
    kinds = [(v.step, v.kind) for v in monotonicity_audit(t).violations]
    assert kinds == [(1, "benign_changed"), (2, "no_strict_increase")]


def test_assumption5_monitor_threshold(scenario):
    t = run_path(scenario, seed=1, horizon=5)
    report = assumption5_monitor(t, threshold=0.0)
    assert not report.holds
    assert report.first_violation_step == 0
    assert assumption5_monitor(run_path(scenario, seed=1)).holds


def test_oracle_audit_on_short_path(scenario):
    t = run_path(scenario, seed=5, horizon=6)
    rows = oracle_audit(t, scenario)
    assert len(rows) == 6
    assert max(r.abs_diff for r in rows) <= 1e-12


# === Monte Carlo ===

def test_trial_seed_is_a_stable_split():
    assert trial_seed(42, 0) == trial_seed(42, 0)
    seeds = {trial_seed(42, i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_single_trial_summary(scenario):
    summary = run_monte_carlo(scenario, 1, base_seed=7, horizon=30)
    t = run_path(scenario, seed=trial_seed(7, 0), horizon=30)
    assert summary.emp_mean.tolist() == t.pi_true_column
    assert np.all(summary.emp_var == 0.0)
    assert summary.pi_hat.tolist() == t.pi_hat_column
    assert summary.convergence_histogram == {t.convergence_step: 1}


def test_monte_carlo_is_reproducible(scenario):
    a = run_monte_carlo(scenario, 5, base_seed=11, horizon=40)
    b = run_monte_carlo(scenario, 5, base_seed=11, horizon=40)
    assert np.array_equal(a.emp_mean, b.emp_mean)
    assert np.array_equal(a.emp_var, b.emp_var)
    assert np.array_equal(a.pi_hat, b.pi_hat)
    assert np.all((a.emp_mean >= 0.0) & (a.emp_mean <= 1.0))


def test_monte_carlo_independent_of_worker_count(scenario):
    serial = run_monte_carlo(scenario, 4, base_seed=3, horizon=25)
    parallel = run_monte_carlo(scenario, 4, base_seed=3, horizon=25, workers=2)
    assert np.array_equal(serial.emp_mean, parallel.emp_mean)
    assert np.array_equal(serial.emp_var, parallel.emp_var)
    assert serial.convergence_histogram == parallel.convergence_histogram


def test_monte_carlo_needs_a_trial(scenario):
    with pytest.raises(ValueError):
        run_monte_carlo(scenario, 0)
