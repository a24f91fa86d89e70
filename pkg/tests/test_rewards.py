import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grl.core import build_grid
from grl.errors import ConfigError, UndefinedCurvatureError
from grl.rewards import (
    BoundedCurvatureCoverage,
    CoverageReward,
    EntropyReward,
    ModularGlobalReward,
    SafetyBonus,
    SynergyReward,
    bounded_curvature_coverage,
    chebyshev_disks,
    compute_curvature,
    coverage_reward,
    diverse_synergy_reward,
    entropy_reward,
    modularize,
    random_synergy_sets,
    random_unsafe_states,
    reward_curvature,
    safe_coverage_reward,
    square_disks,
    synergy_reward,
)
from grl.rewards.factory import build_reward
from grl.types import GroundSet

# 2x2 grid, H = 3: |V| = 12
SMALL_GRID = build_grid({"width": 2, "height": 2, "horizon": 3})

CATALOG = {
    "coverage": {"kind": "coverage", "disk": {"shape": "chebyshev", "radius": 0}},
    "bounded_coverage": {"kind": "bounded_coverage", "alpha": 0.3},
    "entropy": {"kind": "entropy"},
    "mutual_information": {"kind": "mutual_information"},
    "synergy": {"kind": "synergy", "synergy_sets": [[0, 5, 6], [1, 2, 9, 11]]},
    "diverse_synergy": {
        "kind": "diverse_synergy",
        "synergy_sets": [[0, 5], [3, 7, 10]],
        "disk": {"shape": "square", "size": 2},
    },
    "safe_coverage": {"kind": "safe_coverage", "unsafe_states": [3]},
    "modular": {"kind": "modular"},
}
SUBMODULAR = ["coverage", "bounded_coverage", "entropy", "mutual_information"]
SUPERMODULAR = ["synergy"]
MONOTONE = ["coverage", "bounded_coverage", "mutual_information", "synergy"]


def catalog_reward(name, seed=0):
    return build_reward(
        CATALOG[name], None, SMALL_GRID, np.random.default_rng(seed)
    )


@st.composite
def nested_triples(draw, size=12):
    """(A, B, v) with A a subset of B and v outside B."""
    v = draw(st.integers(0, size - 1))
    outside = [i for i in range(size) if i != v]
    b = draw(st.lists(st.sampled_from(outside), unique=True, max_size=size - 1))
    a = draw(st.lists(st.sampled_from(b), unique=True)) if b else []
    return sorted(a), sorted(b), v


def test_coverage_examples():
    ground = GroundSet(num_states=3, horizon=1)
    reward = CoverageReward(ground, [[1, 2], [2, 3], [4]])
    assert reward.evaluate([]) == 0.0
    assert reward.evaluate([0]) == 2.0
    assert reward.evaluate([0, 1]) == 3.0
    assert reward.marginal(1, [0]) == 1.0
    assert reward.marginal(1, []) == 2.0


def test_coverage_of_disjoint_disks():
    ground = GroundSet(num_states=4, horizon=2)
    reward = CoverageReward(ground, [[0, 1], [2, 3], [4, 5], [6, 7]])
    # States 0, 1, 2 at various times, state 0 twice
    assert reward.evaluate([0, 4, 1, 2]) == 6.0


def test_coverage_rejects_empty_disks():
    with pytest.raises(ConfigError):
        CoverageReward(GroundSet(num_states=2, horizon=1), [[0], []])


def test_disk_shapes():
    gmdp = build_grid({"width": 3, "height": 3, "horizon": 2})
    assert square_disks(gmdp, 2)[0] == [0, 1, 3, 4]
    assert square_disks(gmdp, 2)[8] == [8]
    assert chebyshev_disks(gmdp, 1)[4] == list(range(9))
    assert chebyshev_disks(gmdp, 1)[0] == [0, 1, 3, 4]
    assert chebyshev_disks(gmdp, 0)[5] == [5]


def test_bounded_coverage_counts_repeats_with_alpha():
    ground = GroundSet(num_states=2, horizon=3)
    reward = BoundedCurvatureCoverage(ground, alpha=0.5)
    # State 0 at t = 0 and t = 1, state 1 at t = 2
    assert reward.evaluate([0, 2, 5]) == pytest.approx(2.5)
    distinct = BoundedCurvatureCoverage(ground, alpha=0.0)
    assert distinct.evaluate([0, 2, 5]) == 2.0
    additive = BoundedCurvatureCoverage(ground, alpha=1.0)
    assert additive.evaluate([0, 2, 5]) == 3.0


def test_bounded_coverage_curvature():
    ground = GroundSet(num_states=2, horizon=2)
    report = compute_curvature(BoundedCurvatureCoverage(ground, alpha=0.9))
    assert report.k_sub == pytest.approx(0.1)
    assert report.k_sup == 0.0


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_bounded_coverage_curvature_is_one_minus_alpha(alpha):
    report = compute_curvature(BoundedCurvatureCoverage(SMALL_GRID.ground, alpha))
    assert report.k_sub == pytest.approx(1 - alpha)


def test_entropy_examples():
    two = EntropyReward(GroundSet(num_states=3, horizon=2))
    assert two.evaluate([]) == 0.0
    assert two.evaluate([0, 3]) == pytest.approx(0.0)
    assert two.evaluate([0, 4]) == pytest.approx(np.log(2))
    four = EntropyReward(GroundSet(num_states=3, horizon=4))
    # Counts (2, 1, 1)
    assert four.evaluate([0, 3, 7, 11]) == pytest.approx(1.5 * np.log(2))


def test_synergy_examples():
    ground = GroundSet(num_states=3, horizon=1)
    reward = SynergyReward(ground, [[0, 1]], beta=2.0)
    assert reward.evaluate([2]) == 0.0
    assert reward.evaluate([0, 1, 2]) == 4.0
    linear = SynergyReward(ground, [[0, 1], [1, 2]], beta=1.0)
    assert linear.marginal(1, []) == linear.marginal(1, [0, 2]) == 2.0


def test_synergy_rejects_sublinear_beta():
    with pytest.raises(ConfigError):
        SynergyReward(GroundSet(num_states=2, horizon=1), [[0, 1]], beta=0.5)


def test_diverse_synergy_example():
    ground = GroundSet(num_states=3, horizon=1)
    reward = diverse_synergy_reward(ground, [[0], [1], [2]], [[0, 1]], beta=2.0)
    assert reward.evaluate([0, 1, 2]) == 7.0
    assert reward.evaluate([]) == 0.0
    q, g = reward.decomposition
    rng = np.random.default_rng(3)
    for _ in range(100):
        subset = np.flatnonzero(rng.random(ground.size) < 0.5)
        assert reward.evaluate(subset) == q.evaluate(subset) + g.evaluate(subset)


def test_constructor_functions():
    ground = GroundSet(num_states=3, horizon=1)
    assert coverage_reward(ground, [[0], [1], [2]]).evaluate([0, 2]) == 2.0
    assert bounded_curvature_coverage(ground, 0.5).evaluate([0, 1]) == 2.0
    assert synergy_reward(ground, [[0, 1]]).evaluate([0, 1]) == 4.0
    entropy = entropy_reward(GroundSet(num_states=3, horizon=2))
    assert entropy.evaluate([0, 4]) == pytest.approx(np.log(2))


def test_safe_coverage_examples():
    ground = GroundSet(num_states=5, horizon=1)
    disks = [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11], [12]]
    reward = safe_coverage_reward(ground, disks, unsafe_states=[4], penalty=500.0)
    assert reward.evaluate([0, 1, 2, 3]) == 512.0
    assert reward.evaluate([0, 4]) == 4.0
    assert reward.evaluate([]) == 500.0
    assert reward.kind == "arbitrary"
    assert not reward.monotone
    always_safe = safe_coverage_reward(ground, disks, unsafe_states=[], penalty=500.0)
    assert always_safe.evaluate([0, 4]) == 504.0


def test_random_draws_are_seeded():
    gmdp = build_grid({"width": 3, "height": 3, "horizon": 2})
    a = random_unsafe_states(gmdp, 4, np.random.default_rng(1))
    b = random_unsafe_states(gmdp, 4, np.random.default_rng(1))
    assert a == b
    assert 0 not in a
    assert len(set(a)) == 4
    sets = random_synergy_sets(gmdp.ground, 3, 2, np.random.default_rng(1))
    assert all(len(s) == 2 and s == sorted(s) for s in sets)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_chain_matches_evaluate(name):
    reward = catalog_reward(name)
    rng = np.random.default_rng(11)
    for _ in range(20):
        order = rng.permutation(reward.ground.size)[: rng.integers(0, 13)]
        gains = reward.prefix_gains(order)
        total = reward.evaluate([]) + gains.sum()
        assert total == pytest.approx(reward.evaluate(order), abs=1e-9)
        chain = reward.chain()
        for v in order:
            expected = reward.marginal(v, list(chain._members))
            assert chain.peek(v) == pytest.approx(expected, abs=1e-9)
            chain.add(v)
        if len(order):
            assert chain.add(order[0]) == 0.0


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_closed_form_gains_match_brute_force(name):
    reward = catalog_reward(name)
    everything = np.arange(reward.ground.size)
    empty = reward.evaluate([])
    full = reward.evaluate(everything)
    singles = [reward.evaluate([v]) - empty for v in everything]
    loo = [full - reward.evaluate(np.delete(everything, v)) for v in everything]
    np.testing.assert_allclose(reward.singleton_gains(), singles, atol=1e-9)
    np.testing.assert_allclose(reward.leave_one_out_gains(), loo, atol=1e-9)

    subset = np.array([0, 3, 4, 9, 10])
    value = reward.evaluate(subset)
    drops = [value - reward.evaluate(np.delete(subset, i)) for i in range(subset.size)]
    np.testing.assert_allclose(reward.drop_one_gains(subset), drops, atol=1e-9)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_evaluate_has_set_semantics(name):
    reward = catalog_reward(name)
    subset = [7, 1, 4, 1, 10]
    assert reward.evaluate(subset) == pytest.approx(reward.evaluate([1, 4, 7, 10]))
    assert reward.evaluate(subset[::-1]) == pytest.approx(reward.evaluate(subset))


def test_normalized_rewards_vanish_on_empty_set():
    for name in CATALOG:
        reward = catalog_reward(name)
        if reward.normalized:
            assert reward.evaluate([]) == 0.0


@pytest.mark.parametrize("name", SUBMODULAR)
@settings(max_examples=500, deadline=None)
@given(triple=nested_triples())
def test_diminishing_returns(name, triple):
    reward = catalog_reward(name)
    a, b, v = triple
    assert reward.marginal(v, a) >= reward.marginal(v, b) - 1e-9


@pytest.mark.parametrize("name", SUPERMODULAR)
@settings(max_examples=500, deadline=None)
@given(triple=nested_triples())
def test_increasing_returns(name, triple):
    reward = catalog_reward(name)
    a, b, v = triple
    assert reward.marginal(v, a) <= reward.marginal(v, b) + 1e-9


@pytest.mark.parametrize("name", MONOTONE)
@settings(max_examples=200, deadline=None)
@given(triple=nested_triples())
def test_monotone_rewards_never_lose_value(name, triple):
    reward = catalog_reward(name)
    _, b, v = triple
    assert reward.marginal(v, b) >= -1e-9


def test_modular_curvature_is_zero():
    ground = GroundSet(num_states=3, horizon=2)
    reward = ModularGlobalReward(ground, np.arange(1.0, 7.0))
    report = compute_curvature(reward)
    assert report.k_sub == 0.0
    assert report.k_sup == 0.0


def test_square_synergy_supermodular_curvature():
    ground = GroundSet(num_states=3, horizon=1)
    reward = SynergyReward(ground, [[0, 1, 2]], beta=2.0)
    assert compute_curvature(reward).k_sup == pytest.approx(0.8)


def test_curvature_skips_and_fails_on_uninformative_elements():
    ground = GroundSet(num_states=3, horizon=1)
    partial = SynergyReward(ground, [[0, 1]], beta=2.0)
    assert compute_curvature(partial).skipped_elements == (2,)
    with pytest.raises(UndefinedCurvatureError):
        compute_curvature(ModularGlobalReward(ground, np.zeros(3)))


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_curvature_lies_in_unit_interval(name):
    report = reward_curvature(catalog_reward(name))
    assert 0.0 <= report.k_sub <= 1.0
    assert 0.0 <= report.k_sup <= 1.0


def test_penalty_part_makes_bp_curvature_vacuous():
    report = reward_curvature(catalog_reward("safe_coverage"))
    assert report.k_sup == 1.0


def test_modularize():
    ground = GroundSet(num_states=3, horizon=1)
    coverage = CoverageReward(ground, [[0, 1], [2, 3], [4, 5]])
    np.testing.assert_array_equal(modularize(coverage).values, [2, 2, 2])
    synergy = SynergyReward(ground, [[0, 2]], beta=2.0)
    assert modularize(synergy).values[0] == 1.0
    weights = np.array([0.5, 1.5, 2.0])
    modular = ModularGlobalReward(ground, weights)
    surrogate = modularize(modular)
    for r in range(4):
        for subset in itertools.combinations(range(3), r):
            assert surrogate.value(subset) == pytest.approx(modular.evaluate(subset))


def test_safety_bonus_is_not_normalized():
    bonus = SafetyBonus(GroundSet(num_states=2, horizon=2), [1], 10.0)
    assert bonus.evaluate([]) == 10.0
    assert bonus.evaluate([0, 2]) == 10.0
    assert bonus.evaluate([3]) == 0.0
    with pytest.raises(ConfigError):
        SafetyBonus(GroundSet(num_states=2, horizon=2), [5], 10.0)
