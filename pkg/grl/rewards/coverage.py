"""Coverage-type rewards: disk coverage, bounded-curvature coverage, safety."""

from typing import Iterable, List, Sequence

import numpy as np

from ..core import GridGmdp
from ..errors import ConfigError
from ..types import GroundSet, RewardKind
from .base import GlobalReward, RewardChain, Subset, SumReward, as_indices


class CoverageReward(GlobalReward):
    """F(X) = |union of D^s over the states visited by X|."""

    kind: RewardKind = "submodular"
    time_invariant = True
    name = "coverage"

    def __init__(self, ground: GroundSet, disks: Sequence[Iterable[int]]):
        super().__init__(ground)
        disks = [sorted({int(c) for c in disk}) for disk in disks]
        if len(disks) != ground.num_states:
            raise ConfigError(
                f"Got {len(disks)} disks for {ground.num_states} states"
            )
        if any(not disk for disk in disks):
            raise ConfigError("Every coverage disk must be nonempty")
        cells = np.unique(np.concatenate([np.array(d) for d in disks]))
        column = {int(c): i for i, c in enumerate(cells)}
        membership = np.zeros((ground.num_states, cells.size), dtype=bool)
        for state, disk in enumerate(disks):
            membership[state, [column[c] for c in disk]] = True
        membership.setflags(write=False)
        self.cells = cells
        self.membership = membership
        self.cells_of = [np.flatnonzero(row) for row in membership]

    def evaluate(self, subset: Subset) -> float:
        states = np.unique(self.ground.states_of(as_indices(subset)))
        if states.size == 0:
            return 0.0
        return float(self.membership[states].any(axis=0).sum())

    def covered_cells(self, subset: Subset) -> np.ndarray:
        states = np.unique(self.ground.states_of(as_indices(subset)))
        if states.size == 0:
            return np.array([], dtype=np.int64)
        return self.cells[self.membership[states].any(axis=0)]

    def chain(self) -> RewardChain:
        return _CoverageChain(self)

    def singleton_gains(self) -> np.ndarray:
        per_state = self.membership.sum(axis=1).astype(float)
        return np.tile(per_state, self.ground.horizon)

    def leave_one_out_gains(self) -> np.ndarray:
        multiplicity = self.ground.horizon * self.membership.sum(axis=0)
        per_state = (self.membership & (multiplicity == 1)).sum(axis=1).astype(float)
        return np.tile(per_state, self.ground.horizon)

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        states = self.ground.states_of(as_indices(subset))
        multiplicity = self.membership[states].sum(axis=0)
        return (self.membership[states] & (multiplicity == 1)).sum(axis=1).astype(
            float
        )


class _CoverageChain(RewardChain):
    def __init__(self, reward: CoverageReward):
        super().__init__(0.0)
        self.reward = reward
        self.covered = np.zeros(reward.cells.size, dtype=bool)

    def _fresh(self, element: int) -> np.ndarray:
        state = element % self.reward.ground.num_states
        cells = self.reward.cells_of[state]
        return cells[~self.covered[cells]]

    def _peek(self, element: int) -> float:
        return float(self._fresh(element).size)

    def _add(self, element: int) -> float:
        fresh = self._fresh(element)
        self.covered[fresh] = True
        return float(fresh.size)


class BoundedCurvatureCoverage(GlobalReward):
    """First visit to a state is worth 1, every further visit alpha."""

    kind: RewardKind = "submodular"
    time_invariant = True
    name = "bounded_coverage"

    def __init__(self, ground: GroundSet, alpha: float):
        super().__init__(ground)
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
        self.alpha = float(alpha)

    def _value(self, counts: np.ndarray) -> float:
        visited = counts[counts > 0]
        return float(visited.size + self.alpha * (visited - 1).sum())

    def evaluate(self, subset: Subset) -> float:
        return self._value(self.state_counts(subset))

    def chain(self) -> RewardChain:
        return _BoundedChain(self)

    def singleton_gains(self) -> np.ndarray:
        return np.ones(self.ground.size)

    def leave_one_out_gains(self) -> np.ndarray:
        repeat = self.alpha if self.ground.horizon > 1 else 1.0
        return np.full(self.ground.size, repeat)

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        indices = as_indices(subset)
        counts = self.state_counts(indices)
        return np.where(counts[self.ground.states_of(indices)] == 1, 1.0, self.alpha)


class _BoundedChain(RewardChain):
    def __init__(self, reward: BoundedCurvatureCoverage):
        super().__init__(0.0)
        self.alpha = reward.alpha
        self.num_states = reward.ground.num_states
        self.counts = np.zeros(self.num_states, dtype=np.int64)

    def _peek(self, element: int) -> float:
        return 1.0 if self.counts[element % self.num_states] == 0 else self.alpha

    def _add(self, element: int) -> float:
        gain = self._peek(element)
        self.counts[element % self.num_states] += 1
        return gain


class SafetyBonus(GlobalReward):
    """G(X) = C while X avoids every unsafe state, else 0."""

    kind: RewardKind = "supermodular"
    monotone = False
    normalized = False
    time_invariant = True
    name = "safety_bonus"

    def __init__(self, ground: GroundSet, unsafe_states: Iterable[int], penalty: float):
        super().__init__(ground)
        unsafe = np.zeros(ground.num_states, dtype=bool)
        for state in unsafe_states:
            if not 0 <= int(state) < ground.num_states:
                raise ConfigError(f"Unsafe state {state} is outside the grid")
            unsafe[int(state)] = True
        unsafe.setflags(write=False)
        self.unsafe = unsafe
        self.penalty = float(penalty)

    def _unsafe_elements(self, indices: np.ndarray) -> np.ndarray:
        return self.unsafe[self.ground.states_of(indices)]

    def evaluate(self, subset: Subset) -> float:
        hits = self._unsafe_elements(as_indices(subset))
        return 0.0 if hits.any() else self.penalty

    def chain(self) -> RewardChain:
        return _SafetyChain(self)

    def singleton_gains(self) -> np.ndarray:
        return np.where(
            self._unsafe_elements(np.arange(self.ground.size)), -self.penalty, 0.0
        )

    def _drop_gains(self, indices: np.ndarray) -> np.ndarray:
        hits = self._unsafe_elements(indices)
        if hits.sum() == 1:
            return np.where(hits, -self.penalty, 0.0)
        return np.zeros(indices.size)

    def leave_one_out_gains(self) -> np.ndarray:
        return self._drop_gains(np.arange(self.ground.size, dtype=np.int64))

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        return self._drop_gains(as_indices(subset))


class _SafetyChain(RewardChain):
    def __init__(self, reward: SafetyBonus):
        super().__init__(reward.penalty)
        self.reward = reward
        self.hit = False

    def _peek(self, element: int) -> float:
        state = element % self.reward.ground.num_states
        if self.hit or not self.reward.unsafe[state]:
            return 0.0
        return -self.reward.penalty

    def _add(self, element: int) -> float:
        gain = self._peek(element)
        if self.reward.unsafe[element % self.reward.ground.num_states]:
            self.hit = True
        return gain


def coverage_reward(
    ground: GroundSet, disks: Sequence[Iterable[int]]
) -> CoverageReward:
    return CoverageReward(ground, disks)


def bounded_curvature_coverage(
    ground: GroundSet, alpha: float
) -> BoundedCurvatureCoverage:
    return BoundedCurvatureCoverage(ground, alpha)


def safe_coverage_reward(
    ground: GroundSet,
    disks: Sequence[Iterable[int]],
    unsafe_states: Iterable[int],
    penalty: float = 500.0,
) -> SumReward:
    """Coverage plus a bonus C for never touching an unsafe state.

    Not normalized (F(empty) = C) and not monotone; shipped with its (Q, G)
    decomposition so the BP lower bound applies.
    """
    return SumReward(
        CoverageReward(ground, disks),
        SafetyBonus(ground, unsafe_states, penalty),
        kind="arbitrary",
        name="safe_coverage",
    )


def square_disks(gmdp: GridGmdp, size: int = 2) -> List[List[int]]:
    """Disk of each state: the size x size block extending right and up."""
    disks = []
    for state in range(gmdp.num_states):
        row, col = gmdp.coordinates(state)
        disks.append(
            [
                r * gmdp.width + c
                for r in range(row, min(row + size, gmdp.height))
                for c in range(col, min(col + size, gmdp.width))
            ]
        )
    return disks


def chebyshev_disks(gmdp: GridGmdp, radius: int = 1) -> List[List[int]]:
    """Disk of each state: cells within Chebyshev distance `radius`."""
    disks = []
    for state in range(gmdp.num_states):
        row, col = gmdp.coordinates(state)
        disks.append(
            [
                r * gmdp.width + c
                for r in range(max(row - radius, 0), min(row + radius + 1, gmdp.height))
                for c in range(max(col - radius, 0), min(col + radius + 1, gmdp.width))
            ]
        )
    return disks


def random_unsafe_states(
    gmdp: GridGmdp,
    count: int,
    rng: np.random.Generator,
    exclude: Iterable[int] | None = None,
) -> List[int]:
    """Draw `count` distinct unsafe states, never the start support."""
    if exclude is None:
        exclude = np.flatnonzero(gmdp.initial_distribution)
    banned = {int(s) for s in exclude}
    candidates = np.array([s for s in range(gmdp.num_states) if s not in banned])
    count = min(count, candidates.size)
    return sorted(int(s) for s in rng.choice(candidates, size=count, replace=False))
