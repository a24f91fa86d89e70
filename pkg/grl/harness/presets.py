"""Ready-made experiment configurations for the grid benchmarks."""

from typing import Any, Dict

from ..config import ExperimentConfig, validate_config
from ..errors import ConfigError
from ..types import PresetName

# Full-size grid: 400 states
_LARGE = {"width": 20, "height": 20}

PRESETS: Dict[str, Dict[str, Any]] = {
    # D-optimal design with a GP; the lengthscale varies per seed
    "design": {
        "environment": {**_LARGE, "horizon": 10},
        "reward": {"kind": "mutual_information"},
        "gp": {"lengthscale": 2.0, "lengthscale_spread": 0.5},
        "algorithm": {"name": ["gto", "mod"], "max_iters": 6},
    },
    "synergies": {
        "environment": {**_LARGE, "horizon": 8, "stochasticity_degree": 0.1},
        "reward": {
            "kind": "diverse_synergy",
            "beta": 2.0,
            "n_synergy_sets": 10,
            "synergy_set_size": 3,
            "disk": {"shape": "chebyshev", "radius": 1},
        },
        "algorithm": {
            "name": ["gpo", "mod"],
            "max_iters": 6,
            "n_traj_samples": 20,
            "eval_samples": 20,
        },
    },
    "safe_coverage": {
        "environment": {**_LARGE, "horizon": 20},
        "reward": {
            "kind": "safe_coverage",
            "penalty": 500.0,
            "n_unsafe_states": 10,
            "disk": {"shape": "chebyshev", "radius": 1},
        },
        "algorithm": {"name": ["gto", "mod"], "max_iters": 25},
    },
    "coverage": {
        "environment": {**_LARGE, "horizon": 31},
        "reward": {"kind": "coverage", "disk": {"shape": "square", "size": 2}},
        "algorithm": {
            "name": ["gto", "mod"],
            "max_iters": 35,
            "lower_bound": ["state_dependent", "greedy_state_dependent"],
            "init_moves": 2,
        },
    },
    "bounded_coverage": {
        "environment": {"width": 10, "height": 10, "horizon": 10},
        "reward": {"kind": "bounded_coverage", "alpha": 0.9},
        "algorithm": {"name": ["gto", "mod"], "max_iters": 15},
    },
    "entropy": {
        "environment": {"width": 10, "height": 10, "horizon": 10},
        "reward": {"kind": "entropy"},
        "algorithm": {"name": ["gto", "mod"], "max_iters": 15},
    },
}


def preset(name: PresetName | str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(
            f"Unknown preset {name!r}; choose one of {', '.join(sorted(PRESETS))}"
        )
    return validate_config(
        ExperimentConfig, {**PRESETS[name], "runs": 20}, f"preset {name}"
    )
