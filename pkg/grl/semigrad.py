"""Semi-gradients: tight modular lower bounds of global rewards.

Every constructor returns a `ModularReward` m with m(Y) <= F(Y) for all
Y in V and m(X) = F(X) at its anchor X. Affine parts live in `offset`.
"""

import heapq
from dataclasses import replace
from typing import Dict, List, Tuple

import numpy as np

from .core import Gmdp, sample_trajectories, trajectory_distribution
from .errors import (
    AnchorError,
    ConfigError,
    DecompositionRequiredError,
    NotTimeInvariantError,
    UnsupportedRewardError,
)
from .rewards import GlobalReward
from .rewards.base import Subset, as_indices
from .types import (
    GroundSet,
    LowerBoundVariant,
    ModularReward,
    Permutation,
    TabularPolicy,
    Trajectory,
)

Anchor = Trajectory | Subset


def _anchor_order(ground: GroundSet, anchor: Anchor) -> np.ndarray:
    if isinstance(anchor, Trajectory):
        return anchor.flat(ground.num_states)
    return as_indices(anchor)


def anchored_permutation(ground: GroundSet, anchor: Anchor) -> Permutation:
    """Anchor first (trajectory time order), then V - X from the last time back.

    Within a time step the remaining states are ascending. For time-invariant
    rewards the first copy of a state in the order takes its full gain, which
    puts that gain on the latest copy rather than on t = 0.
    """
    head = _anchor_order(ground, anchor)
    if np.unique(head).size != head.size:
        raise AnchorError("Anchor contains repeated ground elements")
    rest = np.setdiff1d(np.arange(ground.size, dtype=np.int64), head)
    rest = rest[np.lexsort((ground.states_of(rest), -ground.times_of(rest)))]
    return Permutation(order=np.concatenate([head, rest]), anchor_size=head.size)


def random_anchored_permutation(
    ground: GroundSet, anchor: Anchor, rng: np.random.Generator
) -> Permutation:
    """Uniformly shuffled within the anchor block and within its complement."""
    head = rng.permutation(_anchor_order(ground, anchor))
    rest = rng.permutation(
        np.setdiff1d(np.arange(ground.size, dtype=np.int64), head)
    )
    return Permutation(order=np.concatenate([head, rest]), anchor_size=head.size)


def submodular_lower_bound(
    reward: GlobalReward, anchor: Anchor, sigma: Permutation | None = None
) -> ModularReward:
    """Extreme point h(sigma(i)) = F(S_i) - F(S_{i-1}) of the subdifferential at X."""
    ground = reward.ground
    anchor_set = as_indices(_anchor_order(ground, anchor))
    if sigma is None:
        sigma = anchored_permutation(ground, anchor)
    elif not sigma.is_anchored_at(anchor_set):
        raise AnchorError("Permutation prefix is not the anchor set")
    if sigma.order.size != ground.size:
        raise AnchorError(
            f"Permutation covers {sigma.order.size} elements, V has {ground.size}"
        )

    values = np.empty(ground.size)
    values[sigma.order] = reward.prefix_gains(sigma.order)
    return ModularReward(
        values=values,
        anchor=frozenset(int(v) for v in anchor_set),
        provenance="submodular",
        offset=reward.evaluate([]),
    )


def supermodular_lower_bound(reward: GlobalReward, anchor: Anchor) -> ModularReward:
    """m(Y) = G(X) - sum_{X-Y} G(j | X-j) + sum_{Y-X} G(j | empty).

    Stored as values[j] = G(j | X-j) on X, G(j | empty) off X, and the
    constant G(X) - sum_X G(j | X-j) as the offset.
    """
    anchor_set = as_indices(_anchor_order(reward.ground, anchor))
    values = reward.singleton_gains().astype(float, copy=True)
    inside = reward.drop_one_gains(anchor_set)
    values[anchor_set] = inside
    return ModularReward(
        values=values,
        anchor=frozenset(int(v) for v in anchor_set),
        provenance="supermodular",
        offset=reward.evaluate(anchor_set) - float(inside.sum()),
    )


def bp_lower_bound(
    reward: GlobalReward, anchor: Anchor, sigma: Permutation | None = None
) -> ModularReward:
    if reward.decomposition is None:
        raise DecompositionRequiredError(
            f"{reward.name} has kind {reward.kind!r} but no (Q, G) decomposition"
        )
    submodular_part, supermodular_part = reward.decomposition
    bound = submodular_lower_bound(submodular_part, anchor, sigma)
    bound = bound + supermodular_lower_bound(supermodular_part, anchor)
    return ModularReward(
        values=bound.values, anchor=bound.anchor, provenance="bp", offset=bound.offset
    )


def _check_state_level(reward: GlobalReward) -> None:
    if not reward.time_invariant:
        raise NotTimeInvariantError(
            f"{reward.name} depends on visit times; state-dependent bounds need a "
            "time-invariant reward"
        )
    if reward.kind != "submodular" or not reward.monotone:
        raise UnsupportedRewardError(
            f"State-dependent bounds need a monotone submodular reward, "
            f"{reward.name} is {'monotone ' if reward.monotone else ''}{reward.kind}"
        )


def _unvisited_states(ground: GroundSet, traj: Trajectory) -> List[int]:
    visited = set(traj.states)
    return [s for s in range(ground.num_states) if s not in visited]


def greedy_permutation(reward: GlobalReward, traj: Trajectory) -> Permutation:
    """Trajectory first, then unvisited states by largest marginal gain.

    Each chosen state contributes its H time copies; ties go to the lower
    state index. Elements of visited states at other times come last.
    """
    _check_state_level(reward)
    ground = reward.ground
    num_states, horizon = ground.num_states, ground.horizon
    chain = reward.chain()
    head = traj.flat(num_states)
    for element in head:
        chain.add(element)

    # Lazy greedy: stale gains only overestimate for submodular rewards
    heap: List[Tuple[float, int]] = [
        (-chain.peek(s), s) for s in _unvisited_states(ground, traj)
    ]
    heapq.heapify(heap)
    chosen: List[int] = []
    while heap:
        _, state = heapq.heappop(heap)
        key = (-chain.peek(state), state)
        if heap and key > heap[0]:
            heapq.heappush(heap, key)
            continue
        chain.add(state)
        chosen.append(state)

    blocks = [head]
    times = np.arange(horizon, dtype=np.int64) * num_states
    blocks.extend(times + state for state in chosen)
    used = np.concatenate(blocks)
    blocks.append(np.setdiff1d(np.arange(ground.size, dtype=np.int64), used))
    return Permutation(order=np.concatenate(blocks), anchor_size=head.size)


def _unvisited_order(
    ground: GroundSet, traj: Trajectory, sigma: Permutation | None
) -> List[int]:
    unvisited = _unvisited_states(ground, traj)
    if sigma is None:
        return unvisited
    if not sigma.is_anchored_at(traj.flat(ground.num_states)):
        raise AnchorError("Permutation prefix is not the trajectory")
    pending = set(unvisited)
    order = []
    for element in sigma.order[sigma.anchor_size :]:
        state = int(element) % ground.num_states
        if state in pending:
            pending.discard(state)
            order.append(state)
    return order


def state_dependent_lower_bound(
    reward: GlobalReward, traj: Trajectory, sigma: Permutation | None = None
) -> ModularReward:
    """Lower bound that treats every time copy of an unvisited state alike.

    Trajectory elements get their prefix gains; an unvisited state s gets
    g_s / H at every time, g_s its gain in the order given by `sigma`
    (ascending states by default); other copies of visited states get 0.
    """
    _check_state_level(reward)
    ground = reward.ground
    num_states, horizon = ground.num_states, ground.horizon
    values = np.zeros(ground.size)
    chain = reward.chain()
    offset = chain.value
    for element in traj.flat(num_states):
        values[element] = chain.add(element)
    times = np.arange(horizon, dtype=np.int64) * num_states
    for state in _unvisited_order(ground, traj, sigma):
        values[times + state] = chain.add(state) / horizon
    return ModularReward(
        values=values,
        anchor=frozenset(int(v) for v in traj.flat(num_states)),
        provenance="state_dependent",
        offset=offset,
    )


def trajectory_lower_bound(
    reward: GlobalReward,
    traj: Trajectory,
    variant: LowerBoundVariant = "full",
    sigma: Permutation | None = None,
) -> ModularReward:
    """Pick the constructor matching the reward kind and bound variant.

    `sigma` overrides the variant's own permutation, the greedy one included.
    """
    if variant == "state_dependent":
        return state_dependent_lower_bound(reward, traj, sigma)
    if variant == "greedy_state_dependent":
        if sigma is None:
            sigma = greedy_permutation(reward, traj)
        bound = state_dependent_lower_bound(reward, traj, sigma)
        return replace(bound, provenance=variant)
    if reward.kind == "submodular":
        return submodular_lower_bound(reward, traj, sigma)
    if reward.kind == "supermodular":
        return supermodular_lower_bound(reward, traj)
    return bp_lower_bound(reward, traj, sigma)


def _average(
    bounds: List[Tuple[float, ModularReward]], provenance: str
) -> ModularReward:
    values = sum(weight * bound.values for weight, bound in bounds)
    offset = sum(weight * bound.offset for weight, bound in bounds)
    return ModularReward(values=values, provenance=provenance, offset=float(offset))


def expected_lower_bound(
    reward: GlobalReward,
    policy: TabularPolicy,
    gmdp: Gmdp,
    n_samples: int,
    rng: np.random.Generator,
    variant: LowerBoundVariant = "full",
) -> ModularReward:
    """Monte Carlo estimate of E_pi[m_tau], one bound per distinct sample."""
    if n_samples < 1:
        raise ConfigError(f"Expected bounds need at least one sample, got {n_samples}")
    states, actions = sample_trajectories(gmdp, policy, n_samples, rng)
    seen: Dict[bytes, Tuple[int, Trajectory]] = {}
    for row, moves in zip(states, actions):
        key = row.tobytes()
        count, traj = seen.get(key, (0, Trajectory.from_states(row, moves)))
        seen[key] = (count + 1, traj)
    bounds = [
        (count / n_samples, trajectory_lower_bound(reward, traj, variant))
        for count, traj in seen.values()
    ]
    return _average(bounds, f"expected {variant}")


def exact_expected_lower_bound(
    reward: GlobalReward,
    policy: TabularPolicy,
    gmdp: Gmdp,
    variant: LowerBoundVariant = "full",
    max_count: int = 200_000,
) -> ModularReward:
    """E_pi[m_tau] weighted by exact trajectory probabilities."""
    bounds = []
    for states, probability in trajectory_distribution(gmdp, policy, max_count).items():
        actions = [0] * (len(states) - 1)
        traj = Trajectory.from_states(states, actions)
        bounds.append((probability, trajectory_lower_bound(reward, traj, variant)))
    return _average(bounds, f"exact expected {variant}")
