from .base import (
    GlobalReward,
    ModularGlobalReward,
    RewardChain,
    SumReward,
    as_indices,
)
from .coverage import (
    BoundedCurvatureCoverage,
    CoverageReward,
    SafetyBonus,
    bounded_curvature_coverage,
    chebyshev_disks,
    coverage_reward,
    random_unsafe_states,
    safe_coverage_reward,
    square_disks,
)
from .curvature import compute_curvature, modularize, reward_curvature
from .entropy import EntropyReward, entropy_reward
from .synergy import (
    SynergyReward,
    diverse_synergy_reward,
    random_synergy_sets,
    synergy_reward,
)

__all__ = [
    "BoundedCurvatureCoverage",
    "CoverageReward",
    "EntropyReward",
    "GlobalReward",
    "ModularGlobalReward",
    "RewardChain",
    "SafetyBonus",
    "SumReward",
    "SynergyReward",
    "as_indices",
    "bounded_curvature_coverage",
    "chebyshev_disks",
    "compute_curvature",
    "coverage_reward",
    "diverse_synergy_reward",
    "entropy_reward",
    "modularize",
    "random_synergy_sets",
    "random_unsafe_states",
    "reward_curvature",
    "safe_coverage_reward",
    "square_disks",
    "synergy_reward",
]
