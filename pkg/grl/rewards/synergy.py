from typing import Iterable, List, Sequence

import numpy as np

from ..errors import ConfigError
from ..types import GroundSet, RewardKind
from .base import GlobalReward, RewardChain, Subset, SumReward, as_indices
from .coverage import CoverageReward


class SynergyReward(GlobalReward):
    """F(X) = sum_i |X & S_i|^beta; supermodular for beta >= 1."""

    kind: RewardKind = "supermodular"
    name = "synergy"

    def __init__(
        self, ground: GroundSet, synergy_sets: Sequence[Iterable[int]], beta: float
    ):
        super().__init__(ground)
        if beta < 1.0:
            raise ConfigError(f"beta must be at least 1, got {beta}")
        membership = np.zeros((len(synergy_sets), ground.size), dtype=bool)
        for i, members in enumerate(synergy_sets):
            for index in members:
                if not 0 <= int(index) < ground.size:
                    raise ConfigError(
                        f"Synergy set {i} element {index} is outside the ground set"
                    )
                membership[i, int(index)] = True
        membership.setflags(write=False)
        self.membership = membership
        self.beta = float(beta)

    def evaluate(self, subset: Subset) -> float:
        counts = self.membership[:, as_indices(subset)].sum(axis=1)
        return float((counts.astype(float) ** self.beta).sum())

    def chain(self) -> RewardChain:
        return _SynergyChain(self)

    def _step(self, counts: np.ndarray) -> np.ndarray:
        """Gain of growing each set's hit count from counts - 1 to counts."""
        counts = counts.astype(float)
        return counts**self.beta - np.maximum(counts - 1.0, 0.0) ** self.beta

    def singleton_gains(self) -> np.ndarray:
        return self.membership.sum(axis=0).astype(float)

    def leave_one_out_gains(self) -> np.ndarray:
        sizes = self.membership.sum(axis=1)
        return self.membership.T.astype(float) @ self._step(sizes)

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        indices = as_indices(subset)
        hits = self.membership[:, indices]
        return hits.T.astype(float) @ self._step(hits.sum(axis=1))


class _SynergyChain(RewardChain):
    def __init__(self, reward: SynergyReward):
        super().__init__(0.0)
        self.reward = reward
        self.counts = np.zeros(reward.membership.shape[0])

    def _peek(self, element: int) -> float:
        sets = self.reward.membership[:, element]
        counts = self.counts[sets]
        beta = self.reward.beta
        return float(((counts + 1.0) ** beta - counts**beta).sum())

    def _add(self, element: int) -> float:
        gain = self._peek(element)
        self.counts[self.reward.membership[:, element]] += 1.0
        return gain


def synergy_reward(
    ground: GroundSet, synergy_sets: Sequence[Iterable[int]], beta: float = 2.0
) -> SynergyReward:
    return SynergyReward(ground, synergy_sets, beta)


def diverse_synergy_reward(
    ground: GroundSet,
    disks: Sequence[Iterable[int]],
    synergy_sets: Sequence[Iterable[int]],
    beta: float = 2.0,
) -> SumReward:
    """Coverage (Q) plus synergy (G): a BP reward."""
    return SumReward(
        CoverageReward(ground, disks),
        SynergyReward(ground, synergy_sets, beta),
        kind="bp",
        name="diverse_synergy",
    )


def random_synergy_sets(
    ground: GroundSet, count: int, size: int, rng: np.random.Generator
) -> List[List[int]]:
    """`count` sets of `size` distinct ground elements drawn uniformly."""
    size = min(size, ground.size)
    return [
        sorted(int(v) for v in rng.choice(ground.size, size=size, replace=False))
        for _ in range(count)
    ]
