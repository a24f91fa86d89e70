from dataclasses import dataclass, field
from typing import Iterable, List, Literal, Tuple

import numpy as np

from .errors import AnchorError, GrlError

# Define the valid option types
RewardKind = Literal["submodular", "supermodular", "bp", "arbitrary"]
LowerBoundVariant = Literal["full", "state_dependent", "greedy_state_dependent"]
AlgorithmName = Literal["gto", "gpo", "mod", "brute_force"]
GuaranteeCase = Literal["submodular", "supermodular", "bp"]
EvaluationMode = Literal["exact", "monte_carlo"]
PresetName = Literal[
    "design", "synergies", "safe_coverage", "coverage", "bounded_coverage", "entropy"
]
OutputFormat = Literal["svg", "png", "pdf"]

ACTIONS: Tuple[str, ...] = ("left", "right", "up", "down", "stay")

PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GroundSet:
    """The time-extended ground set V = S x T, flattened as time * S + state."""

    num_states: int
    horizon: int

    @property
    def size(self) -> int:
        return self.num_states * self.horizon

    def flatten(self, state: int, time: int) -> int:
        return time * self.num_states + state

    def unflatten(self, index: int) -> "GroundElement":
        time, state = divmod(int(index), self.num_states)
        return GroundElement(state=state, time=time)

    def states_of(self, indices: np.ndarray) -> np.ndarray:
        return indices % self.num_states

    def times_of(self, indices: np.ndarray) -> np.ndarray:
        return indices // self.num_states


@dataclass(frozen=True)
class GroundElement:
    state: int
    time: int

    def flat(self, num_states: int) -> int:
        return self.time * num_states + self.state


@dataclass(frozen=True)
class Trajectory:
    elements: Tuple[GroundElement, ...]
    actions: Tuple[int, ...]

    def __post_init__(self):
        for t, element in enumerate(self.elements):
            if element.time != t:
                raise GrlError(f"Trajectory element {t} has time {element.time}")
        if len(self.actions) != max(len(self.elements) - 1, 0):
            raise GrlError(
                f"Trajectory of {len(self.elements)} elements needs "
                f"{len(self.elements) - 1} actions, got {len(self.actions)}"
            )

    @classmethod
    def from_states(cls, states: Iterable[int], actions: Iterable[int]) -> "Trajectory":
        elements = tuple(
            GroundElement(state=int(s), time=t) for t, s in enumerate(states)
        )
        return cls(elements=elements, actions=tuple(int(a) for a in actions))

    @property
    def states(self) -> Tuple[int, ...]:
        return tuple(e.state for e in self.elements)

    @property
    def horizon(self) -> int:
        return len(self.elements)

    def flat(self, num_states: int) -> np.ndarray:
        """Flat ground-set indices in time order."""
        return np.array(
            [e.flat(num_states) for e in self.elements], dtype=np.int64
        )


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Markovian non-stationary policy, probs[t, s, a]."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 3:
            raise GrlError(f"Policy must have shape [H, S, A], got {probs.shape}")
        if (probs < 0).any() or not np.allclose(
            probs.sum(axis=2), 1.0, rtol=0.0, atol=PROBABILITY_TOLERANCE
        ):
            raise GrlError("Every policy row must be a probability vector")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    @property
    def num_states(self) -> int:
        return self.probs.shape[1]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[2]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.probs == 0.0) | (self.probs == 1.0)))


@dataclass(frozen=True, eq=False)
class Permutation:
    """Ordering of V whose first `anchor_size` positions are the anchor set."""

    order: np.ndarray
    anchor_size: int

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise AnchorError("Permutation order is not a bijection onto V")
        if not 0 <= self.anchor_size <= order.size:
            raise AnchorError(f"Anchor size {self.anchor_size} out of range")
        order.setflags(write=False)
        object.__setattr__(self, "order", order)

    @property
    def anchor(self) -> frozenset:
        return frozenset(int(v) for v in self.order[: self.anchor_size])

    def is_anchored_at(self, subset: Iterable[int]) -> bool:
        anchor = frozenset(int(v) for v in subset)
        return len(anchor) == self.anchor_size and anchor == self.anchor


@dataclass(frozen=True, eq=False)
class ModularReward:
    """Additive reward over V: m(Y) = sum(values[Y]) + offset."""

    values: np.ndarray
    anchor: frozenset = frozenset()
    provenance: str = "modular"
    offset: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def value(self, subset: Iterable[int]) -> float:
        indices = np.unique(np.fromiter((int(v) for v in subset), dtype=np.int64))
        return float(self.values[indices].sum() + self.offset)

    def as_grid(self, ground: GroundSet) -> np.ndarray:
        """Values laid out as [H, S]."""
        return self.values.reshape(ground.horizon, ground.num_states)

    def __add__(self, other: "ModularReward") -> "ModularReward":
        return ModularReward(
            values=self.values + other.values,
            anchor=self.anchor,
            provenance=f"{self.provenance}+{other.provenance}",
            offset=self.offset + other.offset,
        )


@dataclass(frozen=True)
class CurvatureReport:
    k_sub: float
    k_sup: float
    skipped_elements: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class SolveResult:
    policy: TabularPolicy
    values: np.ndarray  # [H + 1, S], values[H] == 0
    optimal_value: float


@dataclass(frozen=True)
class ObjectiveEstimate:
    value: float
    stderr: float = 0.0
    mode: EvaluationMode = "exact"


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    objective_stderr: float = 0.0
    bound_value: float = float("nan")
    wall_ms: float = 0.0


@dataclass
class IterationTrace:
    records: List[IterationRecord] = field(default_factory=list)

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    @property
    def objectives(self) -> List[float]:
        return [r.objective for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class GuaranteeCheck:
    case: GuaranteeCase
    k_sub: float
    k_sup: float
    alpha: float
    observed: float
    reference: float
    passed: bool
    vacuous: bool = False


@dataclass(frozen=True)
class RunRecord:
    seed: int
    algorithm: str
    iteration: int
    objective: float
    objective_stderr: float
    bound_value: float
    k_sub: float
    k_sup: float
    wall_ms: float


RUN_RECORD_COLUMNS: Tuple[str, ...] = (
    "seed",
    "algorithm",
    "iteration",
    "objective",
    "objective_stderr",
    "bound_value",
    "k_sub",
    "k_sup",
    "wall_ms",
)
