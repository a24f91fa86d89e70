"""The global-reward contract shared by every catalog entry."""

from abc import ABC, abstractmethod
from typing import Iterable, List, Set, Tuple

import numpy as np

from ..errors import ShapeMismatchError
from ..types import GroundSet, RewardKind

Subset = Iterable[int] | np.ndarray


def as_indices(subset: Subset) -> np.ndarray:
    """Distinct flat indices of a subset of V, sorted."""
    if isinstance(subset, np.ndarray):
        return np.unique(subset.astype(np.int64, copy=False))
    return np.unique(np.fromiter((int(v) for v in subset), dtype=np.int64))


class RewardChain(ABC):
    """Incremental evaluator of F along a growing set.

    A chain is owned by one caller at a time; `add` mutates it.
    """

    def __init__(self, initial_value: float):
        self.value = initial_value
        self._members: Set[int] = set()

    def __contains__(self, element: int) -> bool:
        return int(element) in self._members

    def peek(self, element: int) -> float:
        """F(X + v) - F(X) without adding v."""
        element = int(element)
        if element in self._members:
            return 0.0
        return self._peek(element)

    def add(self, element: int) -> float:
        element = int(element)
        if element in self._members:
            return 0.0
        gain = self._add(element)
        self._members.add(element)
        self.value += gain
        return gain

    @abstractmethod
    def _peek(self, element: int) -> float: ...

    @abstractmethod
    def _add(self, element: int) -> float: ...


class _ReevaluatingChain(RewardChain):
    def __init__(self, reward: "GlobalReward"):
        super().__init__(reward.evaluate([]))
        self.reward = reward
        self._order: List[int] = []

    def _peek(self, element: int) -> float:
        return self.reward.evaluate(self._order + [element]) - self.value

    def _add(self, element: int) -> float:
        gain = self._peek(element)
        self._order.append(element)
        return gain


class GlobalReward(ABC):
    """Set function F over the ground set V = S x T."""

    kind: RewardKind = "arbitrary"
    monotone: bool = True
    normalized: bool = True
    # F depends on the multiset of visited states only
    time_invariant: bool = False
    name: str = "reward"

    def __init__(self, ground: GroundSet):
        self.ground = ground

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r}, ground={self.ground})"

    @property
    def decomposition(self) -> Tuple["GlobalReward", "GlobalReward"] | None:
        """(Q, G) with F = Q + G, Q submodular and G supermodular."""
        return None

    @abstractmethod
    def evaluate(self, subset: Subset) -> float: ...

    def marginal(self, element: int, subset: Subset) -> float:
        indices = as_indices(subset)
        if int(element) in indices:
            return 0.0
        return self.evaluate(np.append(indices, int(element))) - self.evaluate(indices)

    def chain(self) -> RewardChain:
        return _ReevaluatingChain(self)

    def prefix_gains(self, order: Subset) -> np.ndarray:
        """F(S_i) - F(S_{i-1}) along `order`, with S_0 the empty set."""
        chain = self.chain()
        return np.array([chain.add(v) for v in order], dtype=float)

    def singleton_gains(self) -> np.ndarray:
        """F({v}) - F(empty) for every v in V."""
        empty = self.evaluate([])
        return np.array(
            [self.evaluate([v]) - empty for v in range(self.ground.size)]
        )

    def leave_one_out_gains(self) -> np.ndarray:
        """F(V) - F(V - {v}) for every v in V."""
        everything = np.arange(self.ground.size, dtype=np.int64)
        full = self.evaluate(everything)
        return np.array(
            [full - self.evaluate(np.delete(everything, v)) for v in everything]
        )

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        """F(X) - F(X - {j}) for each j in X, in sorted order of X."""
        indices = as_indices(subset)
        full = self.evaluate(indices)
        return np.array(
            [full - self.evaluate(np.delete(indices, i)) for i in range(indices.size)]
        )

    def state_counts(self, subset: Subset) -> np.ndarray:
        states = self.ground.states_of(as_indices(subset))
        return np.bincount(states, minlength=self.ground.num_states)


class SumReward(GlobalReward):
    """F = Q + G with the parts exposed as a decomposition."""

    def __init__(
        self,
        submodular_part: GlobalReward,
        supermodular_part: GlobalReward,
        kind: RewardKind = "bp",
        name: str = "sum",
    ):
        if submodular_part.ground != supermodular_part.ground:
            raise ShapeMismatchError(
                "Reward parts are defined on different ground sets"
            )
        super().__init__(submodular_part.ground)
        self.parts = (submodular_part, supermodular_part)
        self.kind = kind
        self.name = name
        self.monotone = submodular_part.monotone and supermodular_part.monotone
        self.normalized = submodular_part.normalized and supermodular_part.normalized
        self.time_invariant = (
            submodular_part.time_invariant and supermodular_part.time_invariant
        )

    @property
    def decomposition(self) -> Tuple[GlobalReward, GlobalReward]:
        return self.parts

    def evaluate(self, subset: Subset) -> float:
        indices = as_indices(subset)
        return sum(part.evaluate(indices) for part in self.parts)

    def chain(self) -> RewardChain:
        return _SumChain([part.chain() for part in self.parts])

    def singleton_gains(self) -> np.ndarray:
        return self.parts[0].singleton_gains() + self.parts[1].singleton_gains()

    def leave_one_out_gains(self) -> np.ndarray:
        return self.parts[0].leave_one_out_gains() + self.parts[1].leave_one_out_gains()

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        return self.parts[0].drop_one_gains(subset) + self.parts[1].drop_one_gains(
            subset
        )


class _SumChain(RewardChain):
    def __init__(self, chains: List[RewardChain]):
        super().__init__(sum(chain.value for chain in chains))
        self.chains = chains

    def _peek(self, element: int) -> float:
        return sum(chain.peek(element) for chain in self.chains)

    def _add(self, element: int) -> float:
        return sum(chain.add(element) for chain in self.chains)


class ModularGlobalReward(GlobalReward):
    """F(X) = sum of per-element weights; both sub- and supermodular."""

    kind: RewardKind = "submodular"
    name = "modular"

    def __init__(self, ground: GroundSet, weights: np.ndarray | List[float]):
        super().__init__(ground)
        weights = np.array(weights, dtype=float)
        if weights.shape != (ground.size,):
            raise ShapeMismatchError(
                f"Modular weights have shape {weights.shape}, expected ({ground.size},)"
            )
        weights.setflags(write=False)
        self.weights = weights
        self.monotone = bool((weights >= 0).all())

    def evaluate(self, subset: Subset) -> float:
        return float(self.weights[as_indices(subset)].sum())

    def chain(self) -> RewardChain:
        return _ModularChain(self.weights)

    def singleton_gains(self) -> np.ndarray:
        return self.weights.copy()

    def leave_one_out_gains(self) -> np.ndarray:
        return self.weights.copy()

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        return self.weights[as_indices(subset)].copy()


class _ModularChain(RewardChain):
    def __init__(self, weights: np.ndarray):
        super().__init__(0.0)
        self.weights = weights

    def _peek(self, element: int) -> float:
        return float(self.weights[element])

    def _add(self, element: int) -> float:
        return float(self.weights[element])
