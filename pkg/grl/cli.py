import sys
from pathlib import Path
from typing import cast

import click

from .config import ExperimentConfig, load_experiment_config, validate_config
from .harness import (
    ResultCache,
    emit_plot,
    emit_trajectory_plot,
    preset,
    read_records,
    run_experiment,
    save_with_format,
    summarize,
    write_records,
    write_summary,
)
from .harness.plot import trajectory_highlights
from .harness.presets import PRESETS
from .harness.runner import build_instance, check_guarantees
from .errors import GrlError
from .types import OutputFormat
from .utils import open_file


def _override(config: ExperimentConfig, **updates) -> ExperimentConfig:
    updates = {key: value for key, value in updates.items() if value is not None}
    if not updates:
        return config
    return validate_config(
        ExperimentConfig, {**config.model_dump(), **updates}, "command line"
    )


def infer_output_format(output_path: str | None, format: str | None) -> OutputFormat:
    """Explicit --type wins, then the output suffix, then svg."""
    if format:
        return cast(OutputFormat, format)
    if output_path:
        ext = Path(output_path).suffix.lstrip(".").lower()
        if ext in ("svg", "png", "pdf"):
            return cast(OutputFormat, ext)
    return "svg"


@click.group()
def main():
    """Semi-gradient policy optimization for MDPs with set-function rewards."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, help="First seed (overrides the config)")
@click.option("--runs", type=int, help="Number of seeds (overrides the config)")
@click.option("--out", "-o", type=click.Path(), help="Output directory")
@click.option("--threads", type=int, help="Worker processes (default: GRL_THREADS)")
@click.option("--debug/--no-debug", default=None, help="Show debug information")
@click.option(
    "--timing/--no-timing", default=None, help="Record wall-clock times per iteration"
)
@click.option("--no-cache", is_flag=True, help="Recompute brute-force optima")
def run(
    config_path: str,
    seed: int | None,
    runs: int | None,
    out: str | None,
    threads: int | None,
    debug: bool | None,
    timing: bool | None,
    no_cache: bool,
):
    """Run the configured algorithms over a sweep of seeds."""
    config = _override(
        load_experiment_config(Path(config_path)),
        seed=seed,
        runs=runs,
        debug=debug,
        timing=timing,
    )
    run_config(config, Path(out) if out else Path(config.output_dir), threads, no_cache)


def run_config(
    config: ExperimentConfig, output_dir: Path, threads: int | None, no_cache: bool
) -> None:
    output_dir.mkdir(parents=True, exist_ok=True)
    print(
        f"Running {config.runs} seed(s) of {config.reward.kind} on a "
        f"{config.environment.width}x{config.environment.height} grid",
        file=sys.stderr,
    )
    result = run_experiment(config, threads=threads, use_cache=not no_cache)

    write_records(result.records, output_dir / "records.csv")
    write_summary(result.summary, output_dir / "summary.csv")
    save_with_format(
        emit_plot(result.summary, title=config.reward.kind),
        output_dir / "plot.svg",
        "svg",
    )

    # Final paths of the first seed, when the dynamics are deterministic
    if result.final_trajectories:
        gmdp, reward = build_instance(config, config.seed)
        for (seed, label), traj in sorted(result.final_trajectories.items()):
            if seed != config.seed:
                continue
            svg = emit_trajectory_plot(gmdp, traj, trajectory_highlights(reward, traj))
            save_with_format(svg, output_dir / f"trajectory-{label}.svg", "svg")

    print(f"Saved to {output_dir}", file=sys.stderr)


@main.command("preset")
@click.argument("name", type=click.Choice(sorted(PRESETS)))
@click.option("--out", "-o", type=click.Path(), help="Write the config JSON here")
@click.option("--run", "run_now", is_flag=True, help="Run the preset right away")
@click.option("--threads", type=int, help="Worker processes (with --run)")
def preset_command(name: str, out: str | None, run_now: bool, threads: int | None):
    """Print (or save) a ready-made experiment configuration."""
    config = preset(name)
    if run_now:
        output_dir = Path(out) if out else Path(config.output_dir)
        run_config(config, output_dir, threads, no_cache=False)
        return
    text = config.model_dump_json(indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"Saved to {out}", file=sys.stderr)
    else:
        click.echo(text)


@main.command()
@click.argument("records_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", type=click.Path(), help="Output file")
@click.option(
    "-t",
    "--type",
    "format",
    type=click.Choice(["svg", "png", "pdf"]),
    help="Output format type (default: inferred from output path, or svg)",
)
@click.option("--title", help="Plot title")
@click.option(
    "--open",
    "open_file_flag",
    is_flag=True,
    help="Open with system default application",
)
@click.option("--debug/--no-debug", default=False, help="Show debug information")
def plot(
    records_path: str,
    out: str | None,
    format: str | None,
    title: str | None,
    open_file_flag: bool,
    debug: bool,
):
    """Plot mean objective per iteration with 95% confidence bands."""
    records = read_records(Path(records_path))
    output_format = infer_output_format(out, format)
    output_path = Path(out) if out else Path(records_path).with_name("plot.svg")
    saved = save_with_format(
        emit_plot(summarize(records), title=title), output_path, output_format, debug
    )
    print(f"Saved to {saved}", file=sys.stderr)
    if open_file_flag:
        open_file(saved.absolute())


@main.command("check-guarantees")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--instances", "-n", type=int, default=10, show_default=True)
@click.option("--no-cache", is_flag=True, help="Recompute brute-force optima")
def check_guarantees_command(config_path: str, instances: int, no_cache: bool):
    """Check the one-iteration suboptimality bound on seeded instances."""
    config = load_experiment_config(Path(config_path))
    checks = check_guarantees(config, instances, use_cache=not no_cache)
    failures = 0
    for seed, check in checks:
        if check.vacuous:
            status = "vacuous"
        elif check.passed:
            status = "ok"
        else:
            status = "FAILED"
            failures += 1
        click.echo(
            f"seed {seed}: {check.case} alpha={check.alpha:.4g} "
            f"observed={check.observed:.6g} reference={check.reference:.6g} {status}"
        )
    if failures:
        raise GrlError(f"{failures} of {len(checks)} guarantee checks failed")


@main.command("clear-cache")
@click.option("--debug/--no-debug", default=False, help="Show debug information")
def clear_cache(debug: bool):
    """Delete cached brute-force optima."""
    ResultCache(debug=debug).clear_cache()
    print("Cache cleared successfully", file=sys.stderr)


if __name__ == "__main__":
    main()
