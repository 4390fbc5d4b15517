"""
Reproducibility manifests.

Every output file gets a sibling <output>.manifest.json holding the resolved
configuration, its hash, the tool version, the seed and timing information.
"""
import hashlib
import json
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from src import __version__
from src.models.run_config import RunConfig
from src.utils.table_writer import write_json

MANIFEST_SUFFIX = ".manifest.json"


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form (independent of key order)."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_id(config: RunConfig) -> str:
    """Short run id: first 12 hex digits of the configuration hash."""
    return config_hash(config.computational_dict())[:12]


def build_manifest(
    config: RunConfig,
    subcommand: str,
    wall_clock: float,
    extra: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """
    Manifest record of one run.

    Args:
        config: Resolved configuration
        subcommand: CLI subcommand
        wall_clock: Elapsed seconds
        extra: Additional entries (e.g. failed point counts)

    Returns:
        JSON-ready dict
    """
    computational = config.computational_dict()
    manifest = {
        "tool": "lzspec",
        "version": __version__,
        "subcommand": subcommand,
        "config": computational,
        "config_hash": config_hash(computational),
        "seed": config.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_clock_seconds": wall_clock,
    }
    if extra:
        manifest.update(extra)
    return manifest


def verify_manifest(manifest: Dict[str, Any]) -> bool:
    """True when the stored hash matches the stored config block."""
    return config_hash(manifest.get("config", {})) == manifest.get("config_hash")


def write_manifest(output_path: str, manifest: Dict[str, Any]) -> str:
    """Write the manifest next to output_path; returns the manifest path."""
    path = output_path + MANIFEST_SUFFIX
    write_json(path, manifest)
    return path
