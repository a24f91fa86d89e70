"""Pydantic models for the JSON experiment configuration."""

import json
from pathlib import Path
from typing import Any, List, Literal, Mapping, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .types import AlgorithmName, LowerBoundVariant

RewardName = Literal[
    "modular",
    "coverage",
    "bounded_coverage",
    "entropy",
    "synergy",
    "diverse_synergy",
    "safe_coverage",
    "mutual_information",
]

ModelT = TypeVar("ModelT", bound=BaseModel)


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    width: int = Field(10, ge=1)
    height: int = Field(10, ge=1)
    horizon: int = Field(10, ge=1)
    stochasticity_degree: float = Field(0.0, ge=0.0, le=1.0)
    # Bottom-left cell unless an explicit distribution is given
    initial_state: int = Field(0, ge=0)
    initial_distribution: List[float] | None = None
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_states(self) -> "GridConfig":
        num_states = self.width * self.height
        if self.initial_state >= num_states:
            raise ValueError(
                f"initial_state {self.initial_state} outside grid of "
                f"{num_states} states"
            )
        if self.initial_distribution is not None:
            dist = self.initial_distribution
            if len(dist) != num_states:
                raise ValueError(
                    f"initial_distribution has {len(dist)} entries, "
                    f"expected {num_states}"
                )
            if any(p < 0 for p in dist) or abs(sum(dist) - 1.0) > 1e-9:
                raise ValueError("initial_distribution must be a probability vector")
        return self

    @property
    def num_states(self) -> int:
        return self.width * self.height


class DiskConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    shape: Literal["chebyshev", "square"] = "chebyshev"
    radius: int = Field(1, ge=0)
    size: int = Field(2, ge=1)


class RewardConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: RewardName = "coverage"
    alpha: float = Field(0.1, ge=0.0, le=1.0)
    beta: float = Field(2.0, ge=1.0)
    penalty: float = 500.0
    synergy_sets: List[List[int]] | None = None
    n_synergy_sets: int = Field(5, ge=1)
    synergy_set_size: int = Field(2, ge=1)
    unsafe_states: List[int] | None = None
    n_unsafe_states: int = Field(10, ge=0)
    weights: List[float] | None = None
    disk: DiskConfig = DiskConfig()


class GpConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    nu: Literal[0.5, 1.5, 2.5] = 2.5
    lengthscale: float = Field(2.0, gt=0.0)
    signal_variance: float = Field(1.0, gt=0.0)
    noise_variance: float = Field(0.1, gt=0.0)
    # Per-seed lengthscale multiplier drawn from [1 - spread, 1 + spread]
    lengthscale_spread: float = Field(0.0, ge=0.0, lt=1.0)


class AlgorithmConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: AlgorithmName | List[AlgorithmName] = ["gto", "mod"]
    max_iters: int = Field(35, ge=1)
    lower_bound: LowerBoundVariant | List[LowerBoundVariant] = "full"
    n_traj_samples: int = Field(1, ge=1)
    eval_samples: int = Field(20, ge=1)
    enumeration_budget: int = Field(20000, ge=1)
    init_moves: int | None = Field(None, ge=0)
    n_permutations: int = Field(1, ge=1)
    n_starts: int = Field(1, ge=1)

    @property
    def names(self) -> List[AlgorithmName]:
        return [self.name] if isinstance(self.name, str) else list(self.name)

    @property
    def lower_bounds(self) -> List[LowerBoundVariant]:
        if isinstance(self.lower_bound, str):
            return [self.lower_bound]
        return list(self.lower_bound)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    environment: GridConfig = GridConfig()
    reward: RewardConfig = RewardConfig()
    gp: GpConfig = GpConfig()
    algorithm: AlgorithmConfig = AlgorithmConfig()
    runs: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)
    output_dir: str = "results"
    debug: bool = False
    timing: bool = False

    @model_validator(mode="after")
    def _check_references(self) -> "ExperimentConfig":
        env = self.environment
        num_states = env.num_states
        ground_size = num_states * env.horizon
        for state in self.reward.unsafe_states or []:
            if not 0 <= state < num_states:
                raise ValueError(f"unsafe state {state} outside [0, {num_states})")
        for i, members in enumerate(self.reward.synergy_sets or []):
            for index in members:
                if not 0 <= index < ground_size:
                    raise ValueError(
                        f"synergy_sets[{i}] element {index} outside [0, {ground_size})"
                    )
        if self.reward.weights is not None and len(self.reward.weights) != ground_size:
            raise ValueError(
                f"reward.weights has {len(self.reward.weights)} entries, "
                f"expected {ground_size}"
            )
        stochastic = env.stochasticity_degree > 0.0 or (
            env.initial_distribution is not None
            and sum(1 for p in env.initial_distribution if p > 0) > 1
        )
        if stochastic:
            for name in ("gto", "brute_force"):
                if name in self.algorithm.names:
                    raise ValueError(f"algorithm {name} needs deterministic dynamics")
        return self


def _format_validation_error(error: ValidationError, source: str) -> str:
    lines = [f"Invalid configuration in {source}:"]
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


def validate_config(
    model: Type[ModelT], data: Mapping[str, Any] | BaseModel, source: str = "config"
) -> ModelT:
    """Validate a mapping into `model`, raising ConfigError with field locations."""
    if isinstance(data, model):
        return data
    if isinstance(data, BaseModel):
        data = data.model_dump()
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e, source))


def load_config(model: Type[ModelT], path: Path) -> ModelT:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Failed to read config {path}: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Invalid JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}"
        )
    return validate_config(model, data, str(path))


def load_grid_config(path: Path) -> GridConfig:
    return load_config(GridConfig, path)


def load_experiment_config(path: Path) -> ExperimentConfig:
    return load_config(ExperimentConfig, path)
