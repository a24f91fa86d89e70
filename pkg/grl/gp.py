"""Gaussian-process mutual information for D-optimal sensing paths."""

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .config import GpConfig, validate_config
from .core import GridGmdp
from .errors import ConfigError, NumericalError
from .rewards.base import GlobalReward, RewardChain, Subset, as_indices
from .types import GroundSet, RewardKind

JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True, eq=False)
class GpModel:
    locations: np.ndarray  # [S, 2]
    nu: float = 2.5
    lengthscale: float = 2.0
    signal_variance: float = 1.0
    noise_variance: float = 0.1

    def __post_init__(self):
        if self.nu not in (0.5, 1.5, 2.5):
            raise ConfigError(
                f"Matern smoothness must be 0.5, 1.5 or 2.5, got {self.nu}"
            )
        if self.lengthscale <= 0 or self.signal_variance <= 0:
            raise ConfigError("Kernel lengthscale and signal variance must be positive")
        if self.noise_variance <= 0:
            raise ConfigError("Noise variance must be positive")
        locations = np.array(self.locations, dtype=float)
        locations.setflags(write=False)
        object.__setattr__(self, "locations", locations)

    @classmethod
    def for_grid(
        cls,
        gmdp: GridGmdp,
        config: GpConfig | Mapping[str, Any] | None = None,
        rng: np.random.Generator | None = None,
    ) -> "GpModel":
        """Model over grid cell centres; the lengthscale may be jittered per draw."""
        config = validate_config(GpConfig, config or {}, "gp config")
        lengthscale = config.lengthscale
        if rng is not None and config.lengthscale_spread > 0:
            spread = config.lengthscale_spread
            lengthscale *= rng.uniform(1.0 - spread, 1.0 + spread)
        return cls(
            locations=gmdp.cell_centers(),
            nu=config.nu,
            lengthscale=lengthscale,
            signal_variance=config.signal_variance,
            noise_variance=config.noise_variance,
        )

    def covariance(self, distance: np.ndarray) -> np.ndarray:
        r = np.asarray(distance, dtype=float) / self.lengthscale
        if self.nu == 0.5:
            shape = np.exp(-r)
        elif self.nu == 1.5:
            scaled = np.sqrt(3.0) * r
            shape = (1.0 + scaled) * np.exp(-scaled)
        else:
            scaled = np.sqrt(5.0) * r
            shape = (1.0 + scaled + scaled**2 / 3.0) * np.exp(-scaled)
        return self.signal_variance * shape

    def kernel_matrix(
        self, locations_a: np.ndarray, locations_b: np.ndarray | None = None
    ) -> np.ndarray:
        locations_b = locations_a if locations_b is None else locations_b
        return self.covariance(cdist(locations_a, locations_b))


def matern_kernel(model: GpModel, loc_a: np.ndarray, loc_b: np.ndarray) -> float:
    distance = float(np.linalg.norm(np.asarray(loc_a) - np.asarray(loc_b)))
    return float(model.covariance(np.array(distance)))


def cholesky_with_jitter(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding diagonal jitter 1e-10 .. 1e-6 on failure."""
    identity = np.eye(matrix.shape[0])
    for jitter in JITTERS:
        try:
            return cholesky(matrix + jitter * identity, lower=True)
        except LinAlgError:
            continue
    raise NumericalError(
        f"Cholesky factorization failed for a {matrix.shape[0]}x{matrix.shape[0]} "
        f"matrix even with jitter {JITTERS[-1]:g}"
    )


class MutualInformationReward(GlobalReward):
    """F(X) = 1/2 log det(I + K_XX / noise) with repeated visits as repeated rows.

    Evaluated from per-state visit counts c via the equivalent
    1/2 log det(I + C^1/2 K C^1/2 / noise) over the visited states.
    """

    kind: RewardKind = "submodular"
    time_invariant = True
    name = "mutual_information"

    def __init__(self, ground: GroundSet, model: GpModel):
        super().__init__(ground)
        if model.locations.shape[0] != ground.num_states:
            raise ConfigError(
                f"GP has {model.locations.shape[0]} locations for "
                f"{ground.num_states} states"
            )
        self.model = model
        kernel = model.kernel_matrix(model.locations)
        kernel.setflags(write=False)
        self.kernel = kernel

    def _scaled_gram(self, counts: np.ndarray):
        visited = np.flatnonzero(counts)
        root = np.sqrt(counts[visited].astype(float))
        gram = root[:, None] * self.kernel[np.ix_(visited, visited)] * root[None, :]
        return visited, root, gram

    def log_det_from_counts(self, counts: np.ndarray) -> float:
        visited, _, gram = self._scaled_gram(counts)
        if visited.size == 0:
            return 0.0
        factor = cholesky_with_jitter(
            np.eye(visited.size) + gram / self.model.noise_variance
        )
        return float(np.log(np.diag(factor)).sum())

    def evaluate(self, subset: Subset) -> float:
        return self.log_det_from_counts(self.state_counts(subset))

    def posterior_covariance(self, counts: np.ndarray) -> np.ndarray:
        """[S, S] posterior covariance of f after counts[s] noisy reads at s."""
        visited, root, gram = self._scaled_gram(counts)
        if visited.size == 0:
            return self.kernel.copy()
        noise = self.model.noise_variance
        factor = cholesky_with_jitter(gram + noise * np.eye(visited.size))
        cross = solve_triangular(
            factor, root[:, None] * self.kernel[visited, :], lower=True
        )
        return self.kernel - cross.T @ cross

    def _drop_gain(self, posterior_variance: np.ndarray) -> np.ndarray:
        # Removing one of several reads at s: -1/2 log(1 - P_ss / noise)
        ratio = posterior_variance / self.model.noise_variance
        ratio = np.clip(ratio, 0.0, 1.0 - 1e-15)
        return -0.5 * np.log1p(-ratio)

    def chain(self) -> RewardChain:
        return _PosteriorChain(self)

    def singleton_gains(self) -> np.ndarray:
        per_state = 0.5 * np.log1p(np.diag(self.kernel) / self.model.noise_variance)
        return np.tile(per_state, self.ground.horizon)

    def leave_one_out_gains(self) -> np.ndarray:
        counts = np.full(self.ground.num_states, self.ground.horizon)
        posterior = self.posterior_covariance(counts)
        return np.tile(self._drop_gain(np.diag(posterior)), self.ground.horizon)

    def drop_one_gains(self, subset: Subset) -> np.ndarray:
        indices = as_indices(subset)
        counts = self.state_counts(indices)
        posterior = np.diag(self.posterior_covariance(counts))
        return self._drop_gain(posterior[self.ground.states_of(indices)])


class _PosteriorChain(RewardChain):
    """Rank-one posterior updates: each read at s gains 1/2 log(1 + P_ss / noise)."""

    def __init__(self, reward: MutualInformationReward):
        super().__init__(0.0)
        self.num_states = reward.ground.num_states
        self.noise = reward.model.noise_variance
        self.posterior = reward.kernel.copy()

    def _peek(self, element: int) -> float:
        state = element % self.num_states
        return float(0.5 * np.log1p(self.posterior[state, state] / self.noise))

    def _add(self, element: int) -> float:
        state = element % self.num_states
        variance = self.posterior[state, state]
        column = self.posterior[:, state].copy()
        self.posterior -= np.outer(column, column) / (self.noise + variance)
        return float(0.5 * np.log1p(variance / self.noise))


def mutual_information_reward(
    ground: GroundSet, model: GpModel
) -> MutualInformationReward:
    return MutualInformationReward(ground, model)
