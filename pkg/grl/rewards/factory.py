from typing import Any, List, Mapping

import numpy as np

from ..config import DiskConfig, GpConfig, RewardConfig, validate_config
from ..core import GridGmdp
from ..gp import GpModel, MutualInformationReward
from .base import GlobalReward, ModularGlobalReward
from .coverage import (
    BoundedCurvatureCoverage,
    CoverageReward,
    chebyshev_disks,
    random_unsafe_states,
    safe_coverage_reward,
    square_disks,
)
from .entropy import EntropyReward
from .synergy import SynergyReward, diverse_synergy_reward, random_synergy_sets


def build_disks(gmdp: GridGmdp, disk: DiskConfig) -> List[List[int]]:
    if disk.shape == "square":
        return square_disks(gmdp, disk.size)
    return chebyshev_disks(gmdp, disk.radius)


def build_reward(
    reward_config: RewardConfig | Mapping[str, Any],
    gp_config: GpConfig | Mapping[str, Any] | None,
    gmdp: GridGmdp,
    rng: np.random.Generator,
) -> GlobalReward:
    """Turn a reward block into a reward object.

    Random pieces (synergy sets, unsafe states, GP lengthscale jitter) are
    drawn from `rng` only when the config leaves them unspecified.
    """
    config = validate_config(RewardConfig, reward_config, "reward config")
    ground = gmdp.ground
    kind = config.kind

    if kind == "modular":
        if config.weights is not None:
            weights = np.array(config.weights, dtype=float)
        else:
            weights = rng.uniform(0.0, 1.0, size=ground.size)
        return ModularGlobalReward(ground, weights)
    if kind == "coverage":
        return CoverageReward(ground, build_disks(gmdp, config.disk))
    if kind == "bounded_coverage":
        return BoundedCurvatureCoverage(ground, config.alpha)
    if kind == "entropy":
        return EntropyReward(ground)
    if kind == "mutual_information":
        model = GpModel.for_grid(gmdp, gp_config, rng)
        return MutualInformationReward(ground, model)

    if kind in ("synergy", "diverse_synergy"):
        synergy_sets = config.synergy_sets
        if synergy_sets is None:
            synergy_sets = random_synergy_sets(
                ground, config.n_synergy_sets, config.synergy_set_size, rng
            )
        if kind == "synergy":
            return SynergyReward(ground, synergy_sets, config.beta)
        return diverse_synergy_reward(
            ground, build_disks(gmdp, config.disk), synergy_sets, config.beta
        )

    # safe_coverage
    unsafe = config.unsafe_states
    if unsafe is None:
        unsafe = random_unsafe_states(gmdp, config.n_unsafe_states, rng)
    return safe_coverage_reward(
        ground, build_disks(gmdp, config.disk), unsafe, config.penalty
    )
