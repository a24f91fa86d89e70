import numpy as np

from ..errors import UndefinedCurvatureError
from ..types import CurvatureReport, ModularReward
from .base import GlobalReward


def _clip(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def compute_curvature(reward: GlobalReward) -> CurvatureReport:
    """Submodular (k_F) and supermodular (k^F) curvature over all of V.

    k_F = 1 - min F(v | V - v) / F(v) over elements with F(v) > 0, and
    k^F = 1 - min F(v) / F(v | V - v) over elements with F(v | V - v) > 0.
    Elements informative for neither ratio are reported as skipped.
    """
    singles = reward.singleton_gains()
    leave_one_out = reward.leave_one_out_gains()

    sub_mask = singles > 0
    sup_mask = leave_one_out > 0
    skipped = tuple(int(v) for v in np.flatnonzero(~(sub_mask | sup_mask)))
    if len(skipped) == singles.size:
        raise UndefinedCurvatureError(
            f"Curvature of {reward.name} is undefined: every element has "
            "F(v) = F(v | V - v) = 0"
        )

    k_sub = 0.0
    if sub_mask.any():
        k_sub = _clip(1.0 - (leave_one_out[sub_mask] / singles[sub_mask]).min())
    k_sup = 0.0
    if sup_mask.any():
        k_sup = _clip(1.0 - (singles[sup_mask] / leave_one_out[sup_mask]).min())
    return CurvatureReport(k_sub=k_sub, k_sup=k_sup, skipped_elements=skipped)


def reward_curvature(reward: GlobalReward) -> CurvatureReport:
    """Curvature that drives the guarantee: k_F of Q and k^F of G when decomposed."""
    if reward.decomposition is None:
        return compute_curvature(reward)
    submodular_part, supermodular_part = reward.decomposition
    sub = compute_curvature(submodular_part)
    try:
        sup = compute_curvature(supermodular_part)
    except UndefinedCurvatureError:
        # No element has positive gains in G (a pure penalty): no usable bound
        sup = CurvatureReport(
            k_sub=0.0, k_sup=1.0, skipped_elements=sub.skipped_elements
        )
    skipped = tuple(sorted(set(sub.skipped_elements) & set(sup.skipped_elements)))
    return CurvatureReport(k_sub=sub.k_sub, k_sup=sup.k_sup, skipped_elements=skipped)


def modularize(reward: GlobalReward) -> ModularReward:
    """Additive surrogate giving each element its singleton value F({v})."""
    values = reward.singleton_gains() + reward.evaluate([])
    return ModularReward(values=values, provenance=f"modularized {reward.name}")
