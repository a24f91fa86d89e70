import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grl.algorithms import markovian_reference_optimum
from grl.core import build_grid, is_admissible, policy_from_actions, uniform_policy
from grl.errors import (
    EnumerationBudgetError,
    ShapeMismatchError,
    StochasticDynamicsError,
)
from grl.rewards import BoundedCurvatureCoverage, ModularGlobalReward
from grl.solver import (
    brute_force_optimum,
    evaluate_modular,
    extract_trajectory,
    follow_policy,
    solve_finite_horizon,
)
from grl.types import ModularReward

GRID = build_grid({"width": 3, "height": 3, "horizon": 4})
CORRIDOR = build_grid({"width": 3, "height": 1, "horizon": 3})


def test_backward_induction_reaches_the_prize():
    values = np.zeros(CORRIDOR.ground.size)
    values[0] = 1.0  # start cell at t = 0
    values[2 * 3 + 2] = 5.0  # far end at t = 2
    result = solve_finite_horizon(CORRIDOR, ModularReward(values=values, offset=0.5))
    assert result.optimal_value == pytest.approx(6.0)
    assert result.values.shape == (4, 3)
    np.testing.assert_array_equal(result.values[-1], 0.0)
    assert result.policy.is_deterministic
    traj = extract_trajectory(CORRIDOR, result)
    assert traj.states == (0, 1, 2)
    assert traj.actions == (1, 1)


def test_ties_go_to_the_lowest_action():
    values = np.zeros(CORRIDOR.ground.size)
    values[3 + 1] = 1e-15
    result = solve_finite_horizon(CORRIDOR, ModularReward(values=values))
    assert result.policy.probs[0, 0, 0] == 1.0
    assert extract_trajectory(CORRIDOR, result).states == (0, 0, 0)


def test_modular_reward_shape_must_match():
    with pytest.raises(ShapeMismatchError):
        solve_finite_horizon(CORRIDOR, ModularReward(values=np.zeros(5)))
    with pytest.raises(ShapeMismatchError):
        evaluate_modular(
            CORRIDOR, uniform_policy(CORRIDOR), ModularReward(values=np.zeros(10))
        )


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dynamic_programming_matches_enumeration(seed):
    weights = np.random.default_rng(seed).normal(size=GRID.ground.size)
    result = solve_finite_horizon(GRID, ModularReward(values=weights))
    _, best = brute_force_optimum(GRID, ModularGlobalReward(GRID.ground, weights))
    assert result.optimal_value == pytest.approx(best, abs=1e-9)
    traj = extract_trajectory(GRID, result)
    assert weights[traj.flat(GRID.num_states)].sum() == pytest.approx(best, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-5.0, 5.0))
def test_uniform_shift_keeps_the_policy(seed, shift):
    weights = np.random.default_rng(seed).normal(size=GRID.ground.size)
    base = solve_finite_horizon(GRID, ModularReward(values=weights))
    shifted = solve_finite_horizon(GRID, ModularReward(values=weights + shift))
    np.testing.assert_array_equal(shifted.policy.probs, base.policy.probs)
    expected = base.optimal_value + GRID.horizon * shift
    assert shifted.optimal_value == pytest.approx(expected, abs=1e-9)


def test_stochastic_solution_is_the_best_markovian_policy(two_state_gmdp):
    weights = np.array([0.0, 1.0, 2.0, 0.5, 0.3, 1.0])
    modular = ModularReward(values=weights, offset=0.25)
    result = solve_finite_horizon(two_state_gmdp, modular)
    achieved = evaluate_modular(two_state_gmdp, result.policy, modular)
    assert achieved == pytest.approx(result.optimal_value + 0.25)
    _, reference = markovian_reference_optimum(
        two_state_gmdp, ModularGlobalReward(two_state_gmdp.ground, weights)
    )
    assert result.optimal_value == pytest.approx(reference)
    uniform = evaluate_modular(two_state_gmdp, uniform_policy(two_state_gmdp), modular)
    assert uniform <= achieved + 1e-12


def test_evaluate_modular_on_an_open_loop_policy():
    policy = policy_from_actions(GRID, [1, 1, 2])
    # States 0, 1, 2, 5 at times 0..3: flat 0, 10, 20, 32
    modular = ModularReward(values=np.arange(GRID.ground.size, dtype=float), offset=1.5)
    assert evaluate_modular(GRID, policy, modular) == pytest.approx(63.5)


def test_brute_force_counts_distinct_states():
    reward = BoundedCurvatureCoverage(GRID.ground, alpha=0.0)
    traj, value = brute_force_optimum(GRID, reward)
    assert value == 4.0
    assert len(set(traj.states)) == 4
    assert is_admissible(GRID, traj)
    assert reward.evaluate(traj.flat(GRID.num_states)) == value


def test_brute_force_budget(grid4):
    reward = BoundedCurvatureCoverage(grid4.ground, alpha=0.0)
    with pytest.raises(EnumerationBudgetError):
        brute_force_optimum(grid4, reward, max_count=10)


def test_trajectory_operations_need_deterministic_dynamics(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    with pytest.raises(StochasticDynamicsError):
        brute_force_optimum(noisy_grid, reward)
    with pytest.raises(StochasticDynamicsError):
        follow_policy(noisy_grid, uniform_policy(noisy_grid))


def test_follow_policy_replays_the_most_likely_action():
    traj = follow_policy(GRID, policy_from_actions(GRID, [2, 2, 1]))
    assert traj.states == (0, 3, 6, 7)
    assert traj.actions == (2, 2, 1)
