import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grl.algorithms import (
    check_guarantee,
    exact_evaluation_feasible,
    guarantee_alpha,
    markovian_reference_optimum,
    run_gpo,
    run_gto,
    run_mod_baseline,
)
from grl.config import ExperimentConfig
from grl.core import (
    build_grid,
    evaluate_policy_objective,
    policy_from_actions,
    random_trajectory,
    sample_trajectory,
)
from grl.errors import ConfigError, StochasticDynamicsError, UnsupportedRewardError
from grl.harness import build_instance, run_experiment
from grl.rewards import (
    BoundedCurvatureCoverage,
    EntropyReward,
    ModularGlobalReward,
    SumReward,
    SynergyReward,
    random_synergy_sets,
)
from grl.rewards.factory import build_reward
from grl.solver import brute_force_optimum
from grl.types import CurvatureReport, TabularPolicy, Trajectory

GRID3 = build_grid({"width": 3, "height": 3, "horizon": 4})
GRID4 = build_grid({"width": 4, "height": 4, "horizon": 6})
MONOTONE_REWARDS = {
    "coverage": {"kind": "coverage"},
    "bounded_coverage": {"kind": "bounded_coverage", "alpha": 0.3},
    "synergy": {"kind": "synergy", "n_synergy_sets": 6},
    "diverse_synergy": {"kind": "diverse_synergy", "n_synergy_sets": 6},
    "safe_coverage": {"kind": "safe_coverage", "n_unsafe_states": 3},
    "mutual_information": {"kind": "mutual_information"},
}


def assert_gto_trace_improves(trace):
    for previous, record in zip(trace.records, trace.records[1:]):
        assert record.objective >= previous.objective - 1e-9
        # The bound is tight at the previous trajectory and below F everywhere
        assert record.bound_value >= previous.objective - 1e-9
        assert record.bound_value <= record.objective + 1e-9


def gto_instance(name, seed, variant="full"):
    rng = np.random.default_rng(seed)
    reward = build_reward(MONOTONE_REWARDS[name], None, GRID4, rng)
    traj, trace = run_gto(GRID4, reward, variant, rng=rng, max_iters=10)
    return reward, traj, trace


@pytest.mark.parametrize("name", sorted(MONOTONE_REWARDS))
@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_gto_never_decreases_the_objective(name, seed):
    reward, traj, trace = gto_instance(name, seed)
    assert_gto_trace_improves(trace)
    value = reward.evaluate(traj.flat(GRID4.num_states))
    assert value == pytest.approx(max(trace.objectives), abs=1e-9)


@pytest.mark.parametrize("variant", ["state_dependent", "greedy_state_dependent"])
@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_gto_with_state_dependent_bounds_improves(variant, seed):
    _, _, trace = gto_instance("coverage", seed, variant)
    assert_gto_trace_improves(trace)


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(MONOTONE_REWARDS))
def test_gto_monotonicity_on_fifty_instances(name):
    for seed in range(50):
        _, _, trace = gto_instance(name, seed)
        assert_gto_trace_improves(trace)


def test_gto_stops_at_the_first_non_improvement():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    _, trace = run_gto(GRID3, reward, rng=np.random.default_rng(3), max_iters=20)
    objectives = trace.objectives
    assert all(b > a for a, b in zip(objectives[:-2], objectives[1:-1]))
    assert objectives[-1] <= objectives[-2] + 1e-9 or len(trace) == 21
    assert [r.iteration for r in trace.records] == list(range(len(trace)))
    assert math.isnan(trace.records[0].bound_value)


def test_gto_solves_modular_rewards_in_one_step():
    weights = np.random.default_rng(8).normal(size=GRID3.ground.size)
    reward = ModularGlobalReward(GRID3.ground, weights)
    _, best = brute_force_optimum(GRID3, reward)
    traj, trace = run_gto(GRID3, reward, init=Trajectory.from_states([0] * 4, [4] * 3))
    assert trace.records[1].objective == pytest.approx(best)
    assert reward.evaluate(traj.flat(GRID3.num_states)) == pytest.approx(best)


def test_gto_fixed_point_stays_fixed():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    fixed, trace = run_gto(GRID3, reward, rng=np.random.default_rng(6))
    assert len(trace) < 36
    again, rerun = run_gto(GRID3, reward, init=fixed, max_iters=5)
    assert again == fixed
    assert len(rerun) == 2
    assert rerun.objectives[1] <= rerun.objectives[0] + 1e-9


@pytest.mark.parametrize("name", ["coverage", "mutual_information"])
def test_gto_with_extra_permutations_and_starts(name):
    reward = build_reward(
        MONOTONE_REWARDS[name], None, GRID4, np.random.default_rng(0)
    )
    _, single = run_gto(GRID4, reward, rng=np.random.default_rng(9), max_iters=6)
    traj, best = run_gto(
        GRID4,
        reward,
        rng=np.random.default_rng(9),
        max_iters=6,
        n_permutations=4,
        n_starts=3,
    )
    assert_gto_trace_improves(best)
    value = reward.evaluate(traj.flat(GRID4.num_states))
    assert value == pytest.approx(max(best.objectives), abs=1e-9)
    _, restarted = run_gto(
        GRID4, reward, rng=np.random.default_rng(9), max_iters=6, n_starts=3
    )
    # The first start replays the single-start run
    assert max(restarted.objectives) >= max(single.objectives) - 1e-9


def test_gto_needs_a_permutation_and_a_start():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    with pytest.raises(ConfigError):
        run_gto(GRID3, reward, n_permutations=0)
    with pytest.raises(ConfigError):
        run_gto(GRID3, reward, n_starts=0)


def test_gto_needs_deterministic_dynamics(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    with pytest.raises(StochasticDynamicsError):
        run_gto(noisy_grid, reward)


def test_gto_timing_is_opt_in():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    _, silent = run_gto(GRID3, reward, rng=np.random.default_rng(0))
    assert all(r.wall_ms == 0.0 for r in silent.records)
    _, timed = run_gto(GRID3, reward, rng=np.random.default_rng(0), timing=True)
    assert all(r.wall_ms >= 0.0 for r in timed.records)
    assert timed.objectives == silent.objectives


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_one_gto_iteration_meets_the_submodular_guarantee(alpha):
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=alpha)
    _, optimum = brute_force_optimum(GRID3, reward)
    for seed in range(30):
        init = random_trajectory(GRID3, np.random.default_rng(seed))
        _, trace = run_gto(GRID3, reward, init=init, max_iters=1)
        observed = trace.records[1].objective
        check = check_guarantee("submodular", reward, observed, optimum)
        assert check.alpha == pytest.approx(1.0 - alpha)
        assert not check.vacuous
        assert check.passed, check


def mild_synergy(seed):
    rng = np.random.default_rng(seed)
    sets = random_synergy_sets(GRID3.ground, 6, 2, rng)
    return SynergyReward(GRID3.ground, sets, beta=1.1)


def test_one_gto_iteration_meets_the_supermodular_guarantee():
    for seed in range(20):
        reward = mild_synergy(seed)
        _, optimum = brute_force_optimum(GRID3, reward)
        init = random_trajectory(GRID3, np.random.default_rng(seed + 100))
        _, trace = run_gto(GRID3, reward, init=init, max_iters=1)
        check = check_guarantee(
            "supermodular", reward, trace.records[1].objective, optimum
        )
        assert check.k_sup == pytest.approx(1.0 - 1.0 / (2**1.1 - 1.0))
        assert check.alpha < 1.0
        assert check.passed, check


def test_one_gto_iteration_meets_the_bp_guarantee():
    for seed in range(20):
        reward = SumReward(
            BoundedCurvatureCoverage(GRID3.ground, alpha=0.9), mild_synergy(seed)
        )
        _, optimum = brute_force_optimum(GRID3, reward)
        init = random_trajectory(GRID3, np.random.default_rng(seed + 200))
        _, trace = run_gto(GRID3, reward, init=init, max_iters=1)
        check = check_guarantee("bp", reward, trace.records[1].objective, optimum)
        assert check.k_sub == pytest.approx(0.1)
        assert check.alpha < 1.0
        assert check.passed, check


def test_fully_curved_rewards_give_vacuous_checks():
    _, reward = build_instance(
        ExperimentConfig.model_validate(
            {
                "environment": {"width": 3, "height": 3, "horizon": 4},
                "reward": {"kind": "diverse_synergy", "n_synergy_sets": 3},
            }
        ),
        seed=0,
    )
    check = check_guarantee("bp", reward, observed=0.0, reference=10.0)
    assert check.k_sub == 1.0
    assert check.vacuous
    assert check.passed


def test_guarantee_check_rejects_non_monotone_rewards():
    reward = EntropyReward(GRID3.ground)
    with pytest.raises(UnsupportedRewardError):
        check_guarantee("submodular", reward, observed=1.0, reference=1.0)


def test_guarantee_alpha_values():
    assert guarantee_alpha("submodular", 0.3, 0.0) == 0.3
    assert guarantee_alpha("supermodular", 0.0, 0.5) == pytest.approx(1.5)
    assert guarantee_alpha("supermodular", 0.0, 0.0) == 0.0
    assert guarantee_alpha("supermodular", 0.0, 1.0) == math.inf
    assert guarantee_alpha("bp", 0.2, 0.1) == pytest.approx(0.28 / 0.9)
    assert guarantee_alpha("bp", 0.0, 0.3) == pytest.approx(0.51 / 0.7)
    assert guarantee_alpha("bp", 0.9, 1.0) == math.inf


def test_failed_check_is_reported():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.9)
    check = check_guarantee(
        "submodular",
        reward,
        observed=1.0,
        reference=4.0,
        curvature=CurvatureReport(k_sub=0.1, k_sup=0.0),
    )
    assert not check.passed
    assert not check.vacuous


def test_gpo_meets_the_stochastic_guarantee(two_state_gmdp):
    reward = BoundedCurvatureCoverage(two_state_gmdp.ground, alpha=0.5)
    assert exact_evaluation_feasible(two_state_gmdp, 20_000)
    _, reference = markovian_reference_optimum(two_state_gmdp, reward)
    for seed in range(20):
        policy, trace = run_gpo(
            two_state_gmdp, reward, max_iters=1, rng=np.random.default_rng(seed)
        )
        assert isinstance(policy, TabularPolicy)
        assert trace.records[1].objective_stderr == 0.0
        observed = trace.records[1].objective
        check = check_guarantee("submodular", reward, observed, reference)
        assert check.passed, check
        assert trace.records[1].objective <= reference + 1e-9


def test_gpo_returns_the_last_improving_policy(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    policy, trace = run_gpo(
        noisy_grid, reward, n_traj_samples=10, rng=np.random.default_rng(1)
    )
    exact = evaluate_policy_objective(noisy_grid, policy, reward, "exact").value
    assert exact == pytest.approx(max(trace.objectives))


def test_gpo_falls_back_to_monte_carlo(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    _, trace = run_gpo(
        noisy_grid,
        reward,
        eval_samples=50,
        enumeration_budget=1,
        max_iters=2,
        rng=np.random.default_rng(0),
    )
    assert trace.records[0].objective_stderr > 0.0


def test_gpo_on_deterministic_dynamics_replays_gto():
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    init_policy = policy_from_actions(GRID3, [1, 2, 1])
    init = sample_trajectory(GRID3, init_policy, np.random.default_rng(0))
    _, gto = run_gto(GRID3, reward, init=init)
    _, gpo = run_gpo(
        GRID3,
        reward,
        init=init_policy,
        n_traj_samples=1,
        rng=np.random.default_rng(0),
    )
    assert gpo.objectives == pytest.approx(gto.objectives)
    assert [r.bound_value for r in gpo.records[1:]] == pytest.approx(
        [r.bound_value for r in gto.records[1:]]
    )


def test_gpo_is_reproducible(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    runs = [
        run_gpo(
            noisy_grid,
            reward,
            n_traj_samples=3,
            eval_samples=30,
            enumeration_budget=1,
            rng=np.random.default_rng(12),
        )[1]
        for _ in range(2)
    ]
    assert runs[0].objectives == runs[1].objectives
    assert [r.objective_stderr for r in runs[0].records] == [
        r.objective_stderr for r in runs[1].records
    ]


def test_traces_hold_plain_floats(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    _, gpo = run_gpo(noisy_grid, reward, rng=np.random.default_rng(0))
    _, gto = run_gto(GRID3, BoundedCurvatureCoverage(GRID3.ground, alpha=0.5))
    for record in gpo.records + gto.records:
        assert type(record.objective) is float
        assert type(record.bound_value) is float


def test_markovian_reference_beats_every_sampled_policy(two_state_gmdp):
    reward = BoundedCurvatureCoverage(two_state_gmdp.ground, alpha=0.2)
    _, reference = markovian_reference_optimum(two_state_gmdp, reward)
    rng = np.random.default_rng(0)
    for _ in range(10):
        probs = rng.dirichlet(np.ones(2), size=(3, 2))
        value = evaluate_policy_objective(
            two_state_gmdp, TabularPolicy(probs), reward, "exact"
        ).value
        assert value <= reference + 1e-9


def test_mod_baseline_on_bounded_coverage_stays_put():
    # Every element has singleton value 1, so ties keep the agent in place
    reward = BoundedCurvatureCoverage(GRID3.ground, alpha=0.5)
    _, estimate = run_mod_baseline(GRID3, reward)
    assert estimate.value == pytest.approx(1.0 + 0.5 * 3)
    assert estimate.mode == "exact"


def test_mod_baseline_is_optimal_for_modular_rewards():
    weights = np.random.default_rng(2).uniform(size=GRID3.ground.size)
    reward = ModularGlobalReward(GRID3.ground, weights)
    _, estimate = run_mod_baseline(GRID3, reward)
    _, best = brute_force_optimum(GRID3, reward)
    assert estimate.value == pytest.approx(best)


def test_mod_baseline_under_stochastic_dynamics(noisy_grid):
    reward = BoundedCurvatureCoverage(noisy_grid.ground, alpha=0.5)
    policy, estimate = run_mod_baseline(noisy_grid, reward)
    exact = evaluate_policy_objective(noisy_grid, policy, reward, "exact")
    assert estimate.value == pytest.approx(exact.value)


@pytest.mark.slow
def test_gto_beats_mod_on_experimental_design():
    config = ExperimentConfig.model_validate(
        {
            "environment": {"width": 10, "height": 10, "horizon": 10},
            "reward": {"kind": "mutual_information"},
            "gp": {"lengthscale": 2.0, "lengthscale_spread": 0.5},
            "algorithm": {"name": ["gto", "mod"], "max_iters": 6},
            "runs": 20,
        }
    )
    result = run_experiment(config, threads=1, use_cache=False)
    finals = {}
    for record in result.records:
        key = (record.seed, record.algorithm)
        finals[key] = max(finals.get(key, -math.inf), record.objective)
    wins = sum(finals[(seed, "gto")] >= finals[(seed, "mod")] for seed in range(20))
    assert wins >= 18


def final_objectives(result, label):
    finals = {}
    for record in result.records:
        if record.algorithm == label:
            best = finals.get(record.seed, -math.inf)
            finals[record.seed] = max(best, record.objective)
    return finals


@pytest.mark.slow
def test_gto_against_the_non_markovian_optimum():
    config = ExperimentConfig.model_validate(
        {
            "environment": {"width": 4, "height": 4, "horizon": 6},
            "reward": {"kind": "mutual_information"},
            "algorithm": {
                "name": ["gto", "brute_force"],
                "max_iters": 6,
                "n_permutations": 32,
                "n_starts": 4,
            },
            "runs": 5,
        }
    )
    result = run_experiment(config, threads=1, use_cache=False)
    gto = final_objectives(result, "gto")
    optima = final_objectives(result, "brute_force")
    assert sorted(gto) == list(range(5))
    for seed, optimum in optima.items():
        assert 0.9 * optimum <= gto[seed] <= optimum + 1e-9


@pytest.mark.slow
def test_state_dependent_coverage_on_the_large_grid():
    config = ExperimentConfig.model_validate(
        {
            "environment": {"width": 20, "height": 20, "horizon": 31},
            "reward": {"kind": "coverage", "disk": {"shape": "square", "size": 2}},
            "algorithm": {
                "name": ["gto"],
                "max_iters": 35,
                "lower_bound": ["state_dependent", "greedy_state_dependent"],
                "init_moves": 2,
            },
            "runs": 20,
        }
    )
    result = run_experiment(config, threads=1, use_cache=False)
    for label in ("gto-s", "gto-greedy-s"):
        for seed in range(20):
            series = [
                r.objective
                for r in result.records
                if r.algorithm == label and r.seed == seed
            ]
            assert all(b >= a - 1e-9 for a, b in zip(series, series[1:]))
            assert 45 <= max(series) <= 75
    plain = final_objectives(result, "gto-s")
    greedy = final_objectives(result, "gto-greedy-s")
    assert sum(greedy[seed] >= plain[seed] for seed in range(20)) > 10
