"""Seed sweeps over a configured instance family, with CSV output."""

import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from ..algorithms import (
    check_guarantee,
    exact_evaluation_feasible,
    markovian_reference_optimum,
    run_gpo,
    run_gto,
    run_mod_baseline,
)
from ..config import ExperimentConfig
from ..core import GridGmdp, build_grid
from ..errors import (
    EnumerationBudgetError,
    GrlError,
    UndefinedCurvatureError,
    UnsupportedRewardError,
)
from ..rewards import GlobalReward, reward_curvature
from ..rewards.factory import build_reward
from ..solver import brute_force_optimum, follow_policy
from ..types import (
    RUN_RECORD_COLUMNS,
    GuaranteeCase,
    GuaranteeCheck,
    IterationTrace,
    LowerBoundVariant,
    RunRecord,
    Trajectory,
)
from ..utils import resolve_threads
from .result_cache import ResultCache, default_cache_dir

VARIANT_SUFFIXES: Dict[LowerBoundVariant, str] = {
    "full": "",
    "state_dependent": "-s",
    "greedy_state_dependent": "-greedy-s",
}


@dataclass
class SeedOutcome:
    seed: int
    records: List[RunRecord] = field(default_factory=list)
    # Final trajectory per algorithm label (deterministic runs only)
    final_trajectories: Dict[str, Trajectory] = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: List[RunRecord]
    summary: pd.DataFrame
    final_trajectories: Dict[Tuple[int, str], Trajectory]


def seed_streams(seed: int) -> Tuple[np.random.SeedSequence, ...]:
    """Independent streams for the instance draw, initial point and algorithm."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


def build_instance(
    config: ExperimentConfig, seed: int
) -> Tuple[GridGmdp, GlobalReward]:
    instance_stream, _, _ = seed_streams(seed)
    gmdp = build_grid(config.environment)
    reward = build_reward(
        config.reward, config.gp, gmdp, np.random.default_rng(instance_stream)
    )
    return gmdp, reward


def _instance_key(config: ExperimentConfig, seed: int) -> Dict:
    return {
        "environment": config.environment.model_dump(),
        "reward": config.reward.model_dump(),
        "gp": config.gp.model_dump(),
        "seed": seed,
    }


def cached_brute_force(
    config: ExperimentConfig,
    seed: int,
    gmdp: GridGmdp,
    reward: GlobalReward,
    cache: ResultCache | None,
) -> Tuple[Trajectory, float]:
    budget = config.algorithm.enumeration_budget
    key = _instance_key(config, seed)
    if cache is not None:
        hit = cache.get("brute_force", key)
        if hit is not None:
            traj = Trajectory.from_states(hit["states"], hit["actions"])
            return traj, float(hit["value"])
    traj, value = brute_force_optimum(gmdp, reward, max_count=budget)
    if cache is not None:
        cache.set(
            "brute_force",
            key,
            {
                "states": list(traj.states),
                "actions": list(traj.actions),
                "value": value,
            },
        )
    return traj, value


def run_seed(config: ExperimentConfig, seed: int, cache_dir: str | None) -> SeedOutcome:
    """Run every configured algorithm on one seeded instance."""
    _, init_stream, algorithm_stream = seed_streams(seed)
    gmdp, reward = build_instance(config, seed)
    algorithm = config.algorithm
    cache = ResultCache(Path(cache_dir), debug=config.debug) if cache_dir else None
    try:
        curvature = reward_curvature(reward)
        k_sub, k_sup = curvature.k_sub, curvature.k_sup
    except UndefinedCurvatureError:
        k_sub = k_sup = float("nan")

    outcome = SeedOutcome(seed=seed)

    def emit(label: str, trace: IterationTrace) -> None:
        for record in trace.records:
            outcome.records.append(
                RunRecord(
                    seed=seed,
                    algorithm=label,
                    iteration=record.iteration,
                    objective=record.objective,
                    objective_stderr=record.objective_stderr,
                    bound_value=record.bound_value,
                    k_sub=k_sub,
                    k_sup=k_sup,
                    wall_ms=record.wall_ms,
                )
            )

    def single(label: str, value: float, stderr: float, started: float) -> None:
        elapsed = (time.perf_counter() - started) * 1000.0 if config.timing else 0.0
        outcome.records.append(
            RunRecord(
                seed, label, 0, value, stderr, float("nan"), k_sub, k_sup, elapsed
            )
        )

    for name in algorithm.names:
        if config.debug:
            print(f"Debug: seed {seed}: running {name}", file=sys.stderr)
        if name == "gto":
            for variant in algorithm.lower_bounds:
                label = "gto" + VARIANT_SUFFIXES[variant]
                traj, trace = run_gto(
                    gmdp,
                    reward,
                    variant,
                    rng=np.random.default_rng(init_stream),
                    max_iters=algorithm.max_iters,
                    init_moves=algorithm.init_moves,
                    n_permutations=algorithm.n_permutations,
                    n_starts=algorithm.n_starts,
                    timing=config.timing,
                    debug=config.debug,
                )
                emit(label, trace)
                outcome.final_trajectories[label] = traj
        elif name == "gpo":
            for variant in algorithm.lower_bounds:
                _, trace = run_gpo(
                    gmdp,
                    reward,
                    variant,
                    n_traj_samples=algorithm.n_traj_samples,
                    eval_samples=algorithm.eval_samples,
                    max_iters=algorithm.max_iters,
                    rng=np.random.default_rng(algorithm_stream),
                    enumeration_budget=algorithm.enumeration_budget,
                    timing=config.timing,
                    debug=config.debug,
                )
                emit("gpo" + VARIANT_SUFFIXES[variant], trace)
        elif name == "mod":
            started = time.perf_counter()
            policy, estimate = run_mod_baseline(
                gmdp,
                reward,
                eval_samples=algorithm.eval_samples,
                rng=np.random.default_rng(algorithm_stream),
                enumeration_budget=algorithm.enumeration_budget,
            )
            single("mod", estimate.value, estimate.stderr, started)
            if gmdp.is_deterministic:
                outcome.final_trajectories["mod"] = follow_policy(gmdp, policy)
        else:
            started = time.perf_counter()
            traj, value = cached_brute_force(config, seed, gmdp, reward, cache)
            single("brute_force", value, 0.0, started)
            outcome.final_trajectories["brute_force"] = traj
    return outcome


def _sort_key(record: RunRecord) -> Tuple[int, str, int]:
    return record.seed, record.algorithm, record.iteration


def run_experiment(
    config: ExperimentConfig,
    threads: int | None = None,
    use_cache: bool = True,
    cache_dir: Path | None = None,
) -> ExperimentResult:
    """Run `config.runs` seeds (config.seed, config.seed + 1, ...) in parallel."""
    seeds = [config.seed + i for i in range(config.runs)]
    cache_path = str(cache_dir or default_cache_dir()) if use_cache else None
    workers = min(resolve_threads(threads), len(seeds))
    if workers == 1:
        outcomes = [run_seed(config, seed, cache_path) for seed in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    run_seed,
                    [config] * len(seeds),
                    seeds,
                    [cache_path] * len(seeds),
                )
            )

    records = sorted(
        (record for outcome in outcomes for record in outcome.records), key=_sort_key
    )
    final_trajectories = {
        (outcome.seed, label): traj
        for outcome in outcomes
        for label, traj in outcome.final_trajectories.items()
    }
    return ExperimentResult(
        config=config,
        records=records,
        summary=summarize(records),
        final_trajectories=final_trajectories,
    )


def records_frame(records: List[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [astuple(record) for record in records], columns=list(RUN_RECORD_COLUMNS)
    )


def write_records(records: List[RunRecord], path: Path) -> None:
    records_frame(records).to_csv(
        path, index=False, float_format="%.17g", na_rep="nan"
    )


def read_records(path: Path) -> List[RunRecord]:
    try:
        frame = pd.read_csv(path, dtype={"algorithm": str})
    except (OSError, pd.errors.ParserError) as e:
        raise GrlError(f"Failed to read records from {path}: {e}")
    if tuple(frame.columns) != RUN_RECORD_COLUMNS:
        raise GrlError(
            f"{path} does not have the run-record header "
            f"{','.join(RUN_RECORD_COLUMNS)}"
        )
    return [
        RunRecord(
            seed=int(row.seed),
            algorithm=str(row.algorithm),
            iteration=int(row.iteration),
            objective=float(row.objective),
            objective_stderr=float(row.objective_stderr),
            bound_value=float(row.bound_value),
            k_sub=float(row.k_sub),
            k_sup=float(row.k_sup),
            wall_ms=float(row.wall_ms),
        )
        for row in frame.itertuples(index=False)
    ]


def summarize(records: List[RunRecord]) -> pd.DataFrame:
    """Mean, sample std and count of the objective per (algorithm, iteration).

    Each seed's series is carried forward to the last iteration seen in the
    experiment, so converged and single-shot runs keep their final value.
    """
    columns = ["algorithm", "iteration", "mean", "std", "count"]
    if not records:
        return pd.DataFrame(columns=columns)
    frame = records_frame(records)
    last = int(frame["iteration"].max())
    filled = []
    for (algorithm, seed), group in frame.groupby(["algorithm", "seed"], sort=True):
        series = (
            group.set_index("iteration")["objective"]
            .reindex(range(last + 1))
            .ffill()
        )
        filled.append(
            pd.DataFrame(
                {
                    "algorithm": algorithm,
                    "seed": seed,
                    "iteration": series.index,
                    "objective": series.to_numpy(),
                }
            )
        )
    long = pd.concat(filled, ignore_index=True)
    summary = (
        long.groupby(["algorithm", "iteration"], sort=True)["objective"]
        .agg(["mean", "std", "count"])
        .reset_index()
    )
    summary["std"] = summary["std"].fillna(0.0)
    return summary[columns]


def write_summary(summary: pd.DataFrame, path: Path) -> None:
    summary.to_csv(path, index=False, float_format="%.17g", na_rep="nan")


GUARANTEE_CASES: Dict[str, GuaranteeCase] = {
    "submodular": "submodular",
    "supermodular": "supermodular",
    "bp": "bp",
}


def guarantee_case(reward: GlobalReward) -> GuaranteeCase:
    if not reward.monotone:
        raise UnsupportedRewardError(
            f"No one-iteration guarantee for {reward.name}: it is not monotone"
        )
    if reward.kind in GUARANTEE_CASES:
        return GUARANTEE_CASES[reward.kind]
    if reward.decomposition is not None:
        return "bp"
    raise UnsupportedRewardError(
        f"No one-iteration guarantee for {reward.name} ({reward.kind})"
    )


def check_instance(
    config: ExperimentConfig, seed: int, cache_dir: str | None = None
) -> GuaranteeCheck:
    """One GTO (or GPO) iteration against the exact optimum of the seeded instance.

    Deterministic instances compare with the brute-force optimum; stochastic
    ones with the best deterministic Markovian policy, both scored exactly.
    """
    _, init_stream, algorithm_stream = seed_streams(seed)
    gmdp, reward = build_instance(config, seed)
    case = guarantee_case(reward)
    budget = config.algorithm.enumeration_budget
    variant = config.algorithm.lower_bounds[0]
    if gmdp.is_deterministic:
        cache = ResultCache(Path(cache_dir), debug=config.debug) if cache_dir else None
        _, reference = cached_brute_force(config, seed, gmdp, reward, cache)
        _, trace = run_gto(
            gmdp, reward, variant, rng=np.random.default_rng(init_stream), max_iters=1
        )
    else:
        if not exact_evaluation_feasible(gmdp, budget):
            raise EnumerationBudgetError(
                "Guarantee checks on stochastic instances need exact evaluation; "
                f"the trajectory space exceeds the budget of {budget}"
            )
        _, reference = markovian_reference_optimum(gmdp, reward, max_policies=budget)
        _, trace = run_gpo(
            gmdp,
            reward,
            variant,
            n_traj_samples=config.algorithm.n_traj_samples,
            max_iters=1,
            rng=np.random.default_rng(algorithm_stream),
            enumeration_budget=budget,
        )
    return check_guarantee(case, reward, trace.records[1].objective, reference)


def check_guarantees(
    config: ExperimentConfig, instances: int, use_cache: bool = True
) -> List[Tuple[int, GuaranteeCheck]]:
    cache_path = str(default_cache_dir()) if use_cache else None
    return [
        (seed, check_instance(config, seed, cache_path))
        for seed in range(config.seed, config.seed + instances)
    ]
