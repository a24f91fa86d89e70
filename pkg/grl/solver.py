"""Backward induction over the time-extended MDP and exact baselines."""

from typing import List, Tuple

import numpy as np

from .core import (
    DEFAULT_ENUMERATION_BUDGET,
    Gmdp,
    occupancy_measure,
    state_flat_indices,
)
from .errors import (
    EnumerationBudgetError,
    ShapeMismatchError,
    StochasticDynamicsError,
)
from .rewards import GlobalReward
from .types import ModularReward, SolveResult, TabularPolicy, Trajectory

TIE_TOLERANCE = 1e-12


def _reward_grid(gmdp: Gmdp, modular: ModularReward) -> np.ndarray:
    ground = gmdp.ground
    if modular.values.shape != (ground.size,):
        raise ShapeMismatchError(
            f"Modular reward has shape {modular.values.shape}, GMDP needs "
            f"({ground.size},) = H {ground.horizon} x S {ground.num_states}"
        )
    return modular.as_grid(ground)


def solve_finite_horizon(gmdp: Gmdp, modular: ModularReward) -> SolveResult:
    """Maximize E[sum of m(s, t) over visited (s, t)], including t = 0.

    The offset of `modular` is left out of `values` and `optimal_value`.
    """
    rewards = _reward_grid(gmdp, modular)
    horizon, num_states = gmdp.horizon, gmdp.num_states
    values = np.zeros((horizon + 1, num_states))
    probs = np.zeros((horizon, num_states, gmdp.num_actions))
    rows = np.arange(num_states)

    for t in reversed(range(horizon)):
        q = gmdp.transitions @ values[t + 1]  # [S, A]
        best = q.max(axis=1, keepdims=True)
        tolerance = TIE_TOLERANCE * np.maximum(1.0, np.abs(best))
        actions = np.argmax(q >= best - tolerance, axis=1)
        probs[t, rows, actions] = 1.0
        values[t] = rewards[t] + q[rows, actions]

    optimal_value = float(gmdp.initial_distribution @ values[0])
    return SolveResult(
        policy=TabularPolicy(probs), values=values, optimal_value=optimal_value
    )


def _require_deterministic(gmdp: Gmdp, operation: str) -> int:
    if not gmdp.is_deterministic:
        raise StochasticDynamicsError(f"{operation} needs deterministic dynamics")
    return int(gmdp.initial_state)  # type: ignore[arg-type]


def extract_trajectory(gmdp: Gmdp, result: SolveResult) -> Trajectory:
    return follow_policy(gmdp, result.policy)


def follow_policy(gmdp: Gmdp, policy: TabularPolicy) -> Trajectory:
    """Follow the most likely action of `policy` from the start state."""
    state = _require_deterministic(gmdp, "Trajectory extraction")
    states, actions = [state], []
    for t in range(gmdp.horizon - 1):
        action = int(np.argmax(policy.probs[t, state]))
        state = int(np.argmax(gmdp.transitions[state, action]))
        states.append(state)
        actions.append(action)
    return Trajectory.from_states(states, actions)


def _distinct_moves(gmdp: Gmdp) -> List[List[Tuple[int, int]]]:
    """Per state, (next state, lowest action reaching it)."""
    moves = []
    for state in range(gmdp.num_states):
        targets = {}
        for action in range(gmdp.num_actions):
            target = int(np.argmax(gmdp.transitions[state, action]))
            targets.setdefault(target, action)
        moves.append(sorted(targets.items()))
    return moves


def brute_force_optimum(
    gmdp: Gmdp, reward: GlobalReward, max_count: int = DEFAULT_ENUMERATION_BUDGET
) -> Tuple[Trajectory, float]:
    """argmax of F over every admissible trajectory (the non-Markovian optimum)."""
    start = _require_deterministic(gmdp, "Brute-force optimization")
    moves = _distinct_moves(gmdp)
    horizon = gmdp.horizon

    best_value = -np.inf
    best: Tuple[Tuple[int, ...], Tuple[int, ...]] = ((start,), ())
    count = 0
    stack = [((start,), ())]
    while stack:
        states, actions = stack.pop()
        if len(states) == horizon:
            count += 1
            if count > max_count:
                raise EnumerationBudgetError(
                    f"More than {max_count} distinct trajectories; "
                    "raise the enumeration budget"
                )
            value = reward.evaluate(state_flat_indices(states, gmdp.num_states))
            if value > best_value + TIE_TOLERANCE:
                best_value, best = value, (states, actions)
            continue
        for target, action in reversed(moves[states[-1]]):
            stack.append((states + (target,), actions + (action,)))

    return Trajectory.from_states(*best), float(best_value)


def evaluate_modular(
    gmdp: Gmdp, policy: TabularPolicy, modular: ModularReward
) -> float:
    """Exact E_pi[m(tau)] including the offset."""
    rewards = _reward_grid(gmdp, modular)
    occupancy = occupancy_measure(gmdp, policy)
    return float((occupancy * rewards).sum() + modular.offset)
