import numpy as np
from scipy.special import xlogy

from ..types import GroundSet, RewardKind
from .base import GlobalReward, RewardChain, Subset, as_indices


class EntropyReward(GlobalReward):
    """Entropy of state visitation, normalised by the horizon H.

    F(X) = (|X| log H - sum_s c_s log c_s) / H, where c_s counts the visits
    to s in X. On a full trajectory (|X| = H) this is the entropy of the
    empirical state distribution; on smaller sets it stays submodular.
    """

    kind: RewardKind = "submodular"
    monotone = False
    time_invariant = True
    name = "entropy"

    def __init__(self, ground: GroundSet):
        super().__init__(ground)
        self.log_horizon = float(np.log(ground.horizon))

    def _value(self, counts: np.ndarray) -> float:
        horizon = self.ground.horizon
        total = counts.sum()
        return float((total * self.log_horizon - xlogy(counts, counts).sum()) / horizon)

    def _increment(self, count: np.ndarray | float) -> np.ndarray | float:
        """Gain of raising one state's count from `count` to `count + 1`."""
        count = np.asarray(count, dtype=float)
        growth = xlogy(count + 1.0, count + 1.0) - xlogy(count, count)
        return (self.log_horizon - growth) / self.ground.horizon

    def evaluate(self, subset: Subset) -> float:
        return self._value(self.state_counts(as_indices(subset)))

    def chain(self) -> RewardChain:
        return _EntropyChain(self)

    def singleton_gains(self) -> np.ndarray:
        return np.full(self.ground.size, float(self._increment(0.0)))

    def leave_one_out_gains(self) -> np.ndarray:
        horizon = self.ground.horizon
        return np.full(self.ground.size, float(self._increment(horizon - 1.0)))

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        indices = as_indices(subset)
        counts = self.state_counts(indices)
        return np.asarray(
            self._increment(counts[self.ground.states_of(indices)] - 1.0), dtype=float
        )


class _EntropyChain(RewardChain):
    def __init__(self, reward: EntropyReward):
        super().__init__(0.0)
        self.reward = reward
        self.num_states = reward.ground.num_states
        self.counts = np.zeros(self.num_states)

    def _peek(self, element: int) -> float:
        return float(self.reward._increment(self.counts[element % self.num_states]))

    def _add(self, element: int) -> float:
        gain = self._peek(element)
        self.counts[element % self.num_states] += 1.0
        return gain


def entropy_reward(ground: GroundSet) -> EntropyReward:
    return EntropyReward(ground)
