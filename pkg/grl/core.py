"""GMDP data model: grid dynamics, trajectories, sampling and enumeration."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, Iterator, List, Mapping, Tuple

import numpy as np

from .config import GridConfig, validate_config
from .errors import (
    ConfigError,
    EnumerationBudgetError,
    InadmissibleTrajectoryError,
    ShapeMismatchError,
)
from .types import (
    ACTIONS,
    PROBABILITY_TOLERANCE,
    EvaluationMode,
    GroundSet,
    ObjectiveEstimate,
    TabularPolicy,
    Trajectory,
)

if TYPE_CHECKING:
    from .rewards import GlobalReward

DEFAULT_ENUMERATION_BUDGET = 200_000

# (d_row, d_col) per action index; row 0 is the bottom of the grid
_MOVES: Tuple[Tuple[int, int], ...] = ((0, -1), (0, 1), (1, 0), (-1, 0), (0, 0))


@dataclass(frozen=True, eq=False)
class Gmdp:
    """Finite-horizon controlled Markov process <S, A, P, mu, H>."""

    transitions: np.ndarray  # [S, A, S]
    initial_distribution: np.ndarray  # [S]
    horizon: int
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        transitions = np.array(self.transitions, dtype=float)
        mu = np.array(self.initial_distribution, dtype=float)
        if transitions.ndim != 3 or transitions.shape[0] != transitions.shape[2]:
            raise ConfigError(f"Transitions must be [S, A, S], got {transitions.shape}")
        if mu.shape != (transitions.shape[0],):
            raise ConfigError("Initial distribution does not match the state count")
        if self.horizon < 1:
            raise ConfigError("Horizon must be at least 1")
        if (transitions < 0).any() or not np.allclose(
            transitions.sum(axis=2), 1.0, rtol=0.0, atol=PROBABILITY_TOLERANCE
        ):
            raise ConfigError("Every transition row must sum to 1")
        if (mu < 0).any() or abs(mu.sum() - 1.0) > 1e-9:
            raise ConfigError("Initial distribution must be a probability vector")
        cumulative = np.cumsum(transitions, axis=2)
        cumulative /= cumulative[..., -1:]
        for array in (transitions, mu, cumulative):
            array.setflags(write=False)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "initial_distribution", mu)
        object.__setattr__(self, "_cumulative", cumulative)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def ground(self) -> GroundSet:
        return GroundSet(num_states=self.num_states, horizon=self.horizon)

    @property
    def initial_state(self) -> int | None:
        support = np.flatnonzero(self.initial_distribution)
        return int(support[0]) if support.size == 1 else None

    @property
    def is_deterministic(self) -> bool:
        return self.initial_state is not None and bool(
            np.all((self.transitions == 0.0) | (self.transitions == 1.0))
        )

    def successors(self, state: int, action: int) -> np.ndarray:
        return np.flatnonzero(self.transitions[state, action])


@dataclass(frozen=True, eq=False)
class GridGmdp(Gmdp):
    width: int = 1
    height: int = 1
    stochasticity_degree: float = 0.0
    rng_seed: int = 0

    @property
    def actions(self) -> Tuple[str, ...]:
        return ACTIONS

    def coordinates(self, state: int) -> Tuple[int, int]:
        """(row, col) of a state; row 0 is the bottom row."""
        return divmod(int(state), self.width)

    def cell_centers(self) -> np.ndarray:
        """[S, 2] array of (x, y) cell centres at unit spacing."""
        rows, cols = np.divmod(np.arange(self.num_states), self.width)
        return np.stack([cols + 0.5, rows + 0.5], axis=1).astype(float)


def grid_neighbors(width: int, height: int, state: int) -> List[int]:
    """In-grid 4-neighbourhood of a state (excluding the state itself)."""
    row, col = divmod(state, width)
    neighbors = []
    for d_row, d_col in _MOVES[:4]:
        r, c = row + d_row, col + d_col
        if 0 <= r < height and 0 <= c < width:
            neighbors.append(r * width + c)
    return sorted(neighbors)


def grid_move(width: int, height: int, state: int, action: int) -> int:
    row, col = divmod(state, width)
    d_row, d_col = _MOVES[action]
    r, c = row + d_row, col + d_col
    if 0 <= r < height and 0 <= c < width:
        return r * width + c
    return state


def build_grid(config: GridConfig | Mapping[str, Any]) -> GridGmdp:
    """Grid CMP: the intended move w.p. 1-rho, a uniform 4-neighbour w.p. rho."""
    config = validate_config(GridConfig, config, "grid config")
    width, height = config.width, config.height
    num_states = width * height
    rho = config.stochasticity_degree

    transitions = np.zeros((num_states, len(ACTIONS), num_states))
    for state in range(num_states):
        neighbors = grid_neighbors(width, height, state) or [state]
        for action in range(len(ACTIONS)):
            transitions[state, action, grid_move(width, height, state, action)] += (
                1.0 - rho
            )
            if rho > 0.0:
                for neighbor in neighbors:
                    transitions[state, action, neighbor] += rho / len(neighbors)

    if config.initial_distribution is not None:
        mu = np.array(config.initial_distribution, dtype=float)
        mu /= mu.sum()
    else:
        mu = np.zeros(num_states)
        mu[config.initial_state] = 1.0

    return GridGmdp(
        transitions=transitions,
        initial_distribution=mu,
        horizon=config.horizon,
        width=width,
        height=height,
        stochasticity_degree=rho,
        rng_seed=config.seed,
    )


def _check_policy(gmdp: Gmdp, policy: TabularPolicy) -> None:
    expected = (gmdp.horizon, gmdp.num_states, gmdp.num_actions)
    if policy.probs.shape != expected:
        raise ShapeMismatchError(
            f"Policy shape {policy.probs.shape} does not match GMDP {expected}"
        )


def uniform_policy(gmdp: Gmdp) -> TabularPolicy:
    shape = (gmdp.horizon, gmdp.num_states, gmdp.num_actions)
    return TabularPolicy(np.full(shape, 1.0 / gmdp.num_actions))


def policy_from_actions(
    gmdp: Gmdp, actions: List[int] | Tuple[int, ...]
) -> TabularPolicy:
    """Open-loop one-hot policy replaying `actions`, then action 0."""
    probs = np.zeros((gmdp.horizon, gmdp.num_states, gmdp.num_actions))
    for t in range(gmdp.horizon):
        action = actions[t] if t < len(actions) else 0
        probs[t, :, action] = 1.0
    return TabularPolicy(probs)


def sample_trajectories(
    gmdp: Gmdp, policy: TabularPolicy, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n trajectories at once; returns (states [n, H], actions [n, H-1])."""
    _check_policy(gmdp, policy)
    horizon = gmdp.horizon
    states = np.empty((n, horizon), dtype=np.int64)
    actions = np.empty((n, max(horizon - 1, 0)), dtype=np.int64)

    mu_cdf = np.cumsum(gmdp.initial_distribution)
    mu_cdf /= mu_cdf[-1]
    states[:, 0] = _inverse_cdf(mu_cdf[None, :], rng.random(n))
    policy_cdf = np.cumsum(policy.probs, axis=2)
    policy_cdf /= policy_cdf[..., -1:]
    for t in range(horizon - 1):
        current = states[:, t]
        actions[:, t] = _inverse_cdf(policy_cdf[t, current], rng.random(n))
        next_cdf = gmdp._cumulative[current, actions[:, t]]
        states[:, t + 1] = _inverse_cdf(next_cdf, rng.random(n))
    return states, actions


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum((cdf <= u[:, None]).sum(axis=1), cdf.shape[1] - 1)


def sample_trajectory(
    gmdp: Gmdp, policy: TabularPolicy, rng: np.random.Generator
) -> Trajectory:
    states, actions = sample_trajectories(gmdp, policy, 1, rng)
    return Trajectory.from_states(states[0], actions[0])


def idle_actions(gmdp: Gmdp) -> np.ndarray:
    """Per state, the lowest action most likely to keep the agent in place."""
    rows = np.arange(gmdp.num_states)
    return np.argmax(gmdp.transitions[rows, :, rows], axis=1)


def random_trajectory(
    gmdp: Gmdp, rng: np.random.Generator, moves: int | None = None
) -> Trajectory:
    """Trajectory driven by uniformly random actions.

    With `moves` set, only the first `moves` actions are random; the agent
    then takes its idle action for the rest of the horizon.
    """
    policy = uniform_policy(gmdp)
    if moves is not None:
        if moves < 0:
            raise ConfigError(f"moves must be non-negative, got {moves}")
        probs = policy.probs.copy()
        probs[moves:] = 0.0
        probs[moves:, np.arange(gmdp.num_states), idle_actions(gmdp)] = 1.0
        policy = TabularPolicy(probs)
    return sample_trajectory(gmdp, policy, rng)


def _check_trajectory_shape(gmdp: Gmdp, traj: Trajectory) -> None:
    if traj.horizon != gmdp.horizon:
        raise InadmissibleTrajectoryError(
            f"Trajectory has {traj.horizon} steps, GMDP horizon is {gmdp.horizon}"
        )
    if any(not 0 <= s < gmdp.num_states for s in traj.states):
        raise InadmissibleTrajectoryError("Trajectory visits an unknown state")
    if any(not 0 <= a < gmdp.num_actions for a in traj.actions):
        raise InadmissibleTrajectoryError("Trajectory uses an unknown action")


def transition_mass(gmdp: Gmdp, traj: Trajectory) -> float:
    """mu(s0) * prod P(s_{t+1} | s_t, a_t): the policy-free part of p_pi."""
    _check_trajectory_shape(gmdp, traj)
    states, actions = traj.states, traj.actions
    mass = gmdp.initial_distribution[states[0]]
    for t, action in enumerate(actions):
        mass *= gmdp.transitions[states[t], action, states[t + 1]]
    return float(mass)


def is_admissible(gmdp: Gmdp, traj: Trajectory) -> bool:
    """Membership in the dynamics constraint C_M."""
    try:
        return transition_mass(gmdp, traj) > 0.0
    except InadmissibleTrajectoryError:
        return False


def trajectory_probability(
    gmdp: Gmdp, policy: TabularPolicy, traj: Trajectory
) -> float:
    _check_policy(gmdp, policy)
    probability = transition_mass(gmdp, traj)
    states = traj.states
    for t, action in enumerate(traj.actions):
        probability *= policy.probs[t, states[t], action]
    return float(probability)


def _walk(
    gmdp: Gmdp, action_weights: np.ndarray, max_count: int
) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...], float]]:
    """Depth-first walk over (states, actions, weight) with positive weight.

    `action_weights[t, s, a]` multiplies the kernel mass; zero prunes the branch.
    """
    horizon = gmdp.horizon
    count = 0
    stack: List[Tuple[Tuple[int, ...], Tuple[int, ...], float]] = [
        ((int(s),), (), float(gmdp.initial_distribution[s]))
        for s in np.flatnonzero(gmdp.initial_distribution)[::-1]
    ]
    while stack:
        states, actions, weight = stack.pop()
        t = len(states) - 1
        if t == horizon - 1:
            count += 1
            if count > max_count:
                raise EnumerationBudgetError(
                    f"More than {max_count} trajectories; raise the enumeration budget"
                )
            yield states, actions, weight
            continue
        state = states[-1]
        children = []
        for action in range(gmdp.num_actions):
            w_action = action_weights[t, state, action]
            if w_action <= 0.0:
                continue
            for nxt in gmdp.successors(state, action):
                mass = weight * w_action * gmdp.transitions[state, action, nxt]
                children.append((states + (int(nxt),), actions + (action,), mass))
        stack.extend(reversed(children))


@dataclass(frozen=True)
class EnumeratedTrajectory:
    trajectory: Trajectory
    transition_mass: float


def enumerate_trajectories(
    gmdp: Gmdp, max_count: int = DEFAULT_ENUMERATION_BUDGET
) -> List[EnumeratedTrajectory]:
    """Every (states, actions) sequence with positive kernel mass, exactly once."""
    support = int(np.count_nonzero(gmdp.initial_distribution))
    if gmdp.num_actions ** (gmdp.horizon - 1) * support > max_count:
        raise EnumerationBudgetError(
            f"|A|^(H-1) * |supp(mu)| = {gmdp.num_actions}^{gmdp.horizon - 1} * "
            f"{support} exceeds the budget of {max_count}"
        )
    ones = np.ones((gmdp.horizon, gmdp.num_states, gmdp.num_actions))
    return [
        EnumeratedTrajectory(Trajectory.from_states(states, actions), mass)
        for states, actions, mass in _walk(gmdp, ones, max_count)
    ]


def trajectory_distribution(
    gmdp: Gmdp, policy: TabularPolicy, max_count: int = DEFAULT_ENUMERATION_BUDGET
) -> Dict[Tuple[int, ...], float]:
    """Exact distribution over state sequences induced by `policy`."""
    _check_policy(gmdp, policy)
    distribution: Dict[Tuple[int, ...], float] = {}
    for states, _, probability in _walk(gmdp, policy.probs, max_count):
        distribution[states] = distribution.get(states, 0.0) + probability
    return distribution


def state_flat_indices(
    states: Tuple[int, ...] | np.ndarray, num_states: int
) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    return np.arange(states.shape[-1], dtype=np.int64) * num_states + states


def evaluate_policy_objective(
    gmdp: Gmdp,
    policy: TabularPolicy,
    reward: "GlobalReward",
    mode: EvaluationMode = "exact",
    n_samples: int = 1000,
    rng: np.random.Generator | None = None,
    max_count: int = DEFAULT_ENUMERATION_BUDGET,
) -> ObjectiveEstimate:
    """J(pi) = E[F(tau)], exactly by enumeration or by Monte Carlo."""
    if mode == "exact":
        value = 0.0
        for states, probability in trajectory_distribution(
            gmdp, policy, max_count
        ).items():
            value += probability * reward.evaluate(
                state_flat_indices(states, gmdp.num_states)
            )
        return ObjectiveEstimate(value=float(value), stderr=0.0, mode="exact")

    if n_samples < 1:
        raise ConfigError("Monte Carlo evaluation needs at least one sample")
    rng = rng if rng is not None else np.random.default_rng()
    states, _ = sample_trajectories(gmdp, policy, n_samples, rng)
    cache: Dict[bytes, float] = {}
    samples = np.empty(n_samples)
    for i, row in enumerate(states):
        key = row.tobytes()
        if key not in cache:
            cache[key] = reward.evaluate(state_flat_indices(row, gmdp.num_states))
        samples[i] = cache[key]
    stderr = float(samples.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return ObjectiveEstimate(
        value=float(samples.mean()), stderr=stderr, mode="monte_carlo"
    )


def occupancy_measure(gmdp: Gmdp, policy: TabularPolicy) -> np.ndarray:
    """[H, S] probabilities that the state at time t is s under `policy`."""
    _check_policy(gmdp, policy)
    occupancy = np.zeros((gmdp.horizon, gmdp.num_states))
    occupancy[0] = gmdp.initial_distribution
    for t in range(gmdp.horizon - 1):
        state_action = occupancy[t][:, None] * policy.probs[t]
        occupancy[t + 1] = np.einsum("sa,sax->x", state_action, gmdp.transitions)
    return occupancy
