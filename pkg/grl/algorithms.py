"""GTO and GPO meta-algorithms, the MOD baseline and guarantee checks."""

import itertools
import sys
import time
from typing import Tuple

import numpy as np

from .core import (
    DEFAULT_ENUMERATION_BUDGET,
    Gmdp,
    evaluate_policy_objective,
    occupancy_measure,
    random_trajectory,
    uniform_policy,
)
from .errors import (
    ConfigError,
    EnumerationBudgetError,
    StochasticDynamicsError,
    UnsupportedRewardError,
)
from .rewards import GlobalReward, modularize, reward_curvature
from .semigrad import (
    expected_lower_bound,
    random_anchored_permutation,
    trajectory_lower_bound,
)
from .solver import extract_trajectory, solve_finite_horizon
from .types import (
    CurvatureReport,
    GuaranteeCase,
    GuaranteeCheck,
    IterationRecord,
    IterationTrace,
    LowerBoundVariant,
    ObjectiveEstimate,
    Permutation,
    TabularPolicy,
    Trajectory,
)

IMPROVEMENT_TOLERANCE = 1e-9
GUARANTEE_TOLERANCE = 1e-9


class _Stopwatch:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._start = time.perf_counter()

    def lap(self) -> float:
        if not self.enabled:
            return 0.0
        now = time.perf_counter()
        elapsed, self._start = (now - self._start) * 1000.0, now
        return elapsed


def _gto_step(
    gmdp: Gmdp,
    reward: GlobalReward,
    traj: Trajectory,
    variant: LowerBoundVariant,
    sigma: Permutation | None,
) -> Tuple[Trajectory, float, float]:
    """(candidate, F(candidate), m(candidate)) for one bound at `traj`."""
    bound = trajectory_lower_bound(reward, traj, variant, sigma)
    result = solve_finite_horizon(gmdp, bound)
    candidate = extract_trajectory(gmdp, result)
    value = float(reward.evaluate(candidate.flat(gmdp.num_states)))
    return candidate, value, float(result.optimal_value + bound.offset)


def _gto_from(
    gmdp: Gmdp,
    reward: GlobalReward,
    variant: LowerBoundVariant,
    init: Trajectory,
    rng: np.random.Generator,
    max_iters: int,
    n_permutations: int,
    stopwatch: _Stopwatch,
    debug: bool,
) -> Tuple[Trajectory, IterationTrace]:
    traj, value = init, float(reward.evaluate(init.flat(gmdp.num_states)))
    trace = IterationTrace()
    trace.append(IterationRecord(iteration=0, objective=value, wall_ms=stopwatch.lap()))

    for iteration in range(1, max_iters + 1):
        candidate, candidate_value, bound_value = _gto_step(
            gmdp, reward, traj, variant, None
        )
        for _ in range(n_permutations - 1):
            sigma = random_anchored_permutation(gmdp.ground, traj, rng)
            step = _gto_step(gmdp, reward, traj, variant, sigma)
            if step[1] > candidate_value:
                candidate, candidate_value, bound_value = step
        trace.append(
            IterationRecord(
                iteration=iteration,
                objective=candidate_value,
                bound_value=bound_value,
                wall_ms=stopwatch.lap(),
            )
        )
        if debug:
            print(
                f"Debug: GTO iteration {iteration}: F = {candidate_value:.6g}",
                file=sys.stderr,
            )
        if candidate_value <= value + IMPROVEMENT_TOLERANCE:
            break
        traj, value = candidate, candidate_value
    return traj, trace


def run_gto(
    gmdp: Gmdp,
    reward: GlobalReward,
    variant: LowerBoundVariant = "full",
    init: Trajectory | None = None,
    rng: np.random.Generator | None = None,
    max_iters: int = 35,
    init_moves: int | None = None,
    n_permutations: int = 1,
    n_starts: int = 1,
    timing: bool = False,
    debug: bool = False,
) -> Tuple[Trajectory, IterationTrace]:
    """Alternate lower-bound construction and exact DP until F stops improving.

    Record 0 is the initial trajectory. Record t holds F(tau_t) and the
    bound value m(tau_t) (offset included) of the bound built at tau_{t-1}.

    Each iteration solves the default anchored permutation and, with
    `n_permutations` > 1, that many minus one random anchored permutations,
    keeping the candidate with the largest F. With `n_starts` > 1 the loop
    reruns from further random trajectories (`init_moves` random moves, then
    idle) and the start with the best final F is returned with its trace.
    """
    if not gmdp.is_deterministic:
        raise StochasticDynamicsError("GTO needs deterministic dynamics; use GPO")
    if n_permutations < 1 or n_starts < 1:
        raise ConfigError(
            f"GTO needs at least one permutation and one start, got "
            f"{n_permutations} and {n_starts}"
        )
    rng = rng if rng is not None else np.random.default_rng()
    stopwatch = _Stopwatch(timing)

    best: Tuple[Trajectory, IterationTrace] | None = None
    best_value = -np.inf
    for start in range(n_starts):
        if start > 0 or init is None:
            init = random_trajectory(gmdp, rng, init_moves)
        traj, trace = _gto_from(
            gmdp,
            reward,
            variant,
            init,
            rng,
            max_iters,
            n_permutations,
            stopwatch,
            debug,
        )
        value = max(trace.objectives)
        if debug and n_starts > 1:
            print(f"Debug: GTO start {start}: F = {value:.6g}", file=sys.stderr)
        if value > best_value + IMPROVEMENT_TOLERANCE:
            best, best_value = (traj, trace), value
    assert best is not None
    return best


def exact_evaluation_feasible(gmdp: Gmdp, max_count: int) -> bool:
    """Whether every policy's trajectory distribution enumerates within budget."""
    paths = (gmdp.initial_distribution > 0).astype(float)
    support = (gmdp.transitions > 0).sum(axis=1)  # [S, S'] action count per edge
    for _ in range(gmdp.horizon - 1):
        paths = paths @ support
        if paths.sum() > max_count:
            return False
    return paths.sum() <= max_count


def _estimator(
    gmdp: Gmdp,
    reward: GlobalReward,
    eval_samples: int,
    seed: int,
    enumeration_budget: int,
):
    exact = exact_evaluation_feasible(gmdp, enumeration_budget)

    def estimate(policy: TabularPolicy) -> ObjectiveEstimate:
        if exact:
            return evaluate_policy_objective(
                gmdp, policy, reward, "exact", max_count=enumeration_budget
            )
        # Same sample stream for every policy: paired comparisons
        return evaluate_policy_objective(
            gmdp,
            policy,
            reward,
            "monte_carlo",
            n_samples=eval_samples,
            rng=np.random.default_rng(seed),
        )

    return estimate


def run_gpo(
    gmdp: Gmdp,
    reward: GlobalReward,
    variant: LowerBoundVariant = "full",
    init: TabularPolicy | None = None,
    n_traj_samples: int = 1,
    eval_samples: int = 20,
    max_iters: int = 35,
    rng: np.random.Generator | None = None,
    enumeration_budget: int = 20_000,
    timing: bool = False,
    debug: bool = False,
) -> Tuple[TabularPolicy, IterationTrace]:
    """Policy version of GTO built on expected lower bounds.

    J is computed exactly when the trajectory space fits the budget and by
    paired Monte Carlo otherwise. Returns the last improving policy.
    """
    rng = rng if rng is not None else np.random.default_rng()
    stopwatch = _Stopwatch(timing)
    estimate = _estimator(
        gmdp, reward, eval_samples, int(rng.integers(2**62)), enumeration_budget
    )
    policy = init if init is not None else uniform_policy(gmdp)
    current = estimate(policy)
    trace = IterationTrace()
    trace.append(
        IterationRecord(
            iteration=0,
            objective=float(current.value),
            objective_stderr=float(current.stderr),
            wall_ms=stopwatch.lap(),
        )
    )

    for iteration in range(1, max_iters + 1):
        bound = expected_lower_bound(reward, policy, gmdp, n_traj_samples, rng, variant)
        result = solve_finite_horizon(gmdp, bound)
        candidate = estimate(result.policy)
        trace.append(
            IterationRecord(
                iteration=iteration,
                objective=float(candidate.value),
                objective_stderr=float(candidate.stderr),
                bound_value=result.optimal_value + bound.offset,
                wall_ms=stopwatch.lap(),
            )
        )
        if debug:
            print(
                f"Debug: GPO iteration {iteration}: J = {candidate.value:.6g} "
                f"(stderr {candidate.stderr:.3g})",
                file=sys.stderr,
            )
        if candidate.value <= current.value + IMPROVEMENT_TOLERANCE:
            break
        policy, current = result.policy, candidate
    return policy, trace


def run_mod_baseline(
    gmdp: Gmdp,
    reward: GlobalReward,
    eval_samples: int = 20,
    rng: np.random.Generator | None = None,
    enumeration_budget: int = 20_000,
) -> Tuple[TabularPolicy, ObjectiveEstimate]:
    """Optimal policy for the singleton-value surrogate, scored under the true F."""
    result = solve_finite_horizon(gmdp, modularize(reward))
    if gmdp.is_deterministic:
        traj = extract_trajectory(gmdp, result)
        value = reward.evaluate(traj.flat(gmdp.num_states))
        return result.policy, ObjectiveEstimate(value=float(value))
    rng = rng if rng is not None else np.random.default_rng()
    estimate = _estimator(
        gmdp, reward, eval_samples, int(rng.integers(2**62)), enumeration_budget
    )
    return result.policy, estimate(result.policy)


def markovian_reference_optimum(
    gmdp: Gmdp, reward: GlobalReward, max_policies: int = DEFAULT_ENUMERATION_BUDGET
) -> Tuple[TabularPolicy, float]:
    """Best exact J over deterministic Markovian non-stationary policies.

    Only reachable (s, t) with t < H - 1 are decision points; elsewhere the
    action is 0 since it cannot change the trajectory distribution.
    """
    reachable = occupancy_measure(gmdp, uniform_policy(gmdp)) > 0
    decisions = [
        (t, s) for t in range(gmdp.horizon - 1) for s in np.flatnonzero(reachable[t])
    ]
    num_actions = gmdp.num_actions
    if num_actions ** len(decisions) > max_policies:
        raise EnumerationBudgetError(
            f"{num_actions}^{len(decisions)} deterministic policies exceed the "
            f"budget of {max_policies}"
        )

    best_value, best_policy = -np.inf, None
    for choice in itertools.product(range(num_actions), repeat=len(decisions)):
        probs = np.zeros((gmdp.horizon, gmdp.num_states, num_actions))
        probs[..., 0] = 1.0
        for (t, s), action in zip(decisions, choice):
            probs[t, s] = 0.0
            probs[t, s, action] = 1.0
        policy = TabularPolicy(probs)
        value = evaluate_policy_objective(gmdp, policy, reward, "exact").value
        if value > best_value + GUARANTEE_TOLERANCE:
            best_value, best_policy = value, policy
    assert best_policy is not None
    return best_policy, float(best_value)


def guarantee_alpha(case: GuaranteeCase, k_sub: float, k_sup: float) -> float:
    """Suboptimality coefficient: J(pi_1) >= (1 - alpha) J* after one iteration."""
    if case == "submodular":
        return k_sub
    if k_sup >= 1.0:
        return float("inf")
    supermodular = (2.0 * k_sup - k_sup**2) / (1.0 - k_sup)
    if case == "supermodular":
        return supermodular
    mixed = (1.0 - (1.0 - k_sub) * (1.0 - k_sup)) / (1.0 - k_sup)
    return max(supermodular, mixed)


def check_guarantee(
    case: GuaranteeCase,
    reward: GlobalReward,
    observed: float,
    reference: float,
    curvature: CurvatureReport | None = None,
) -> GuaranteeCheck:
    """Compare a one-iteration result against (1 - alpha) times the reference.

    The bound holds for monotone rewards only; others raise
    UnsupportedRewardError. alpha >= 1 makes the bound trivially true; such
    checks are marked vacuous.
    """
    if not reward.monotone:
        raise UnsupportedRewardError(
            f"{reward.name} is not monotone; the one-iteration guarantee does not apply"
        )
    curvature = curvature if curvature is not None else reward_curvature(reward)
    alpha = guarantee_alpha(case, curvature.k_sub, curvature.k_sup)
    vacuous = alpha >= 1.0
    passed = vacuous or observed >= (1.0 - alpha) * reference - GUARANTEE_TOLERANCE
    return GuaranteeCheck(
        case=case,
        k_sub=curvature.k_sub,
        k_sup=curvature.k_sup,
        alpha=alpha,
        observed=observed,
        reference=reference,
        passed=bool(passed),
        vacuous=vacuous,
    )
