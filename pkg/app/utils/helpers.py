import hashlib
import json
import uuid
import aiofiles
from pathlib import Path
from datetime import datetime, timezone

from app import __version__
from app.models.schemas import ExperimentConfig, RunManifest, RunStatus, StageTiming

MANIFEST_NAME = "manifest.json"


def generate_run_id() -> str:
    return str(uuid.uuid4())


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def canonical_config(config: ExperimentConfig) -> str:
    """Sorted-key JSON, so parse -> canonical -> parse is the identity."""
    return json.dumps(json.loads(config.model_dump_json()), indent=2, sort_keys=True)


def config_hash(config: ExperimentConfig, version: str = __version__) -> str:
    """sha256 over the canonical config JSON and the tool version."""
    digest = hashlib.sha256()
    digest.update(canonical_config(config).encode("utf-8"))
    digest.update(version.encode("utf-8"))
    return digest.hexdigest()


def format_float(value: float) -> str:
    """17 significant digits: round-trips a double and is stable across runs."""
    return format(float(value), ".17g")


async def save_manifest(out_dir: Path, manifest: RunManifest) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(out_dir / MANIFEST_NAME, "w") as f:
        await f.write(manifest.model_dump_json(indent=2))


async def load_manifest(out_dir: Path) -> RunManifest | None:
    manifest_file = out_dir / MANIFEST_NAME
    if not manifest_file.exists():
        return None
    async with aiofiles.open(manifest_file, "r") as f:
        content = await f.read()
        return RunManifest(**json.loads(content))


async def update_run_progress(
    out_dir: Path,
    status: RunStatus,
    progress: int,
    message: str = "",
    timing: StageTiming | None = None,
    outputs: list[str] | None = None,
    error: str | None = None
) -> RunManifest | None:
    manifest = await load_manifest(out_dir)
    if manifest:
        manifest.status = status
        manifest.progress = progress
        manifest.message = message
        manifest.updated_at = utcnow()
        if timing is not None:
            manifest.timings.append(timing)
        if outputs:
            manifest.outputs = sorted(set(manifest.outputs) | set(outputs))
        if error is not None:
            manifest.error = error
        await save_manifest(out_dir, manifest)
    return manifest


def sanitize_filename(filename: str) -> str:
    """Remove or replace characters that are unsafe for filenames."""
    unsafe_chars = '<>:"/\\|?* '
    for char in unsafe_chars:
        filename = filename.replace(char, "_")
    return filename
