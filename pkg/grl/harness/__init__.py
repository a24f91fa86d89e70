from .plot import emit_plot, emit_trajectory_plot
from .presets import PRESETS, preset
from .result_cache import ResultCache, default_cache_dir
from .runner import (
    ExperimentResult,
    build_instance,
    read_records,
    run_experiment,
    run_seed,
    summarize,
    write_records,
    write_summary,
)
from .svg_converter import save_with_format

__all__ = [
    "PRESETS",
    "ExperimentResult",
    "ResultCache",
    "build_instance",
    "default_cache_dir",
    "emit_plot",
    "emit_trajectory_plot",
    "preset",
    "read_records",
    "run_experiment",
    "run_seed",
    "save_with_format",
    "summarize",
    "write_records",
    "write_summary",
]
