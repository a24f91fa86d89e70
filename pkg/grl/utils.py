import hashlib
import json
import os
import platform
import subprocess
import sys
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from .errors import ConfigError


def open_file(path: Path):
    """Open a file with the default system application"""
    try:
        if platform.system() == "Darwin":
            subprocess.run(["open", str(path)])
        elif platform.system() == "Windows":
            subprocess.run(["start", str(path)], shell=True)
        else:
            subprocess.run(["xdg-open", str(path)])
    except Exception as e:
        print(f"Failed to open file: {e}", file=sys.stderr)


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit request, else GRL_THREADS (.env aware), else CPUs."""
    load_dotenv()
    if requested is not None:
        threads = requested
    else:
        raw = os.getenv("GRL_THREADS")
        if raw is None:
            return os.cpu_count() or 1
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"GRL_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"Thread count must be at least 1, got {threads}")
    return threads


def stable_hash(payload: Any) -> str:
    """sha256 of the canonical JSON form of `payload`."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
