import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..utils import stable_hash

SECONDS_PER_DAY = 86_400


def default_cache_dir() -> Path:
    override = os.getenv("GRL_CACHE_DIR")
    return Path(override) if override else Path.home() / ".grl" / "cache"


class ResultCache:
    """On-disk cache of expensive exact results (brute-force optima).

    Entries are JSON files under <cache_dir>/<2 hex>/<rest of sha256>.json,
    keyed by the kind of result and the instance description.
    """

    def __init__(self, cache_dir: Path | None = None, debug: bool = False):
        self.cache_dir = cache_dir if cache_dir is not None else default_cache_dir()
        self.debug = debug
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _warn(self, message: str) -> None:
        if self.debug:
            print(f"Warning: {message}", file=sys.stderr)

    def _entry_path(self, kind: str, instance: Dict[str, Any]) -> Path:
        digest = stable_hash({"kind": kind, "instance": instance})
        bucket = self.cache_dir / digest[:2]
        bucket.mkdir(exist_ok=True)
        return bucket / f"{digest[2:]}.json"

    def _entries(self) -> List[Path]:
        return sorted(self.cache_dir.glob("*/*.json"))

    def _prune(self, max_entries: int = 1000, max_age_days: int = 30) -> None:
        """Drop stale entries once the cache holds more than `max_entries`."""
        entries = self._entries()
        if len(entries) <= max_entries:
            return
        cutoff = time.time() - max_age_days * SECONDS_PER_DAY
        for entry in entries:
            try:
                if entry.stat().st_mtime < cutoff:
                    entry.unlink()
            except OSError as e:
                self._warn(f"could not prune cache entry {entry}: {e}")

    def get(self, kind: str, instance: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        entry = self._entry_path(kind, instance)
        if not entry.exists():
            return None
        try:
            return json.loads(entry.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            self._warn(f"unreadable cache entry {entry.name}, recomputing ({e})")
            entry.unlink(missing_ok=True)
            return None

    def set(self, kind: str, instance: Dict[str, Any], result: Dict[str, Any]) -> None:
        entry = self._entry_path(kind, instance)
        entry.write_text(json.dumps(result, sort_keys=True), encoding="utf-8")
        self._prune()

    def clear_cache(self) -> None:
        """Delete every cached result and the empty buckets."""
        try:
            entries = self._entries()
            for entry in entries:
                entry.unlink(missing_ok=True)
            for bucket in self.cache_dir.iterdir():
                if bucket.is_dir() and not any(bucket.iterdir()):
                    bucket.rmdir()
        except OSError as e:
            self._warn(f"failed to clear {self.cache_dir}: {e}")
            return
        if self.debug:
            print(
                f"Removed {len(entries)} cached result(s) from {self.cache_dir}",
                file=sys.stderr,
            )
