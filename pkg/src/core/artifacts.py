"""
Artifact writing and reading with provenance headers.

Every inter-stage artifact (JSONL, CSV, JSON report) starts with a provenance
header recording the artifact name, the config hash, a timestamp and the tool
version. Output is deterministic: sorted keys, UTF-8, shortest round-trip
floats, so identical inputs and config produce byte-identical files once the
provenance timestamp is pinned in the configuration.

Usage:
    from src.core.artifacts import ArtifactWriter

    with ArtifactWriter(config, output_dir / "segments.jsonl", stage="segment") as artifact:
        artifact.write_jsonl(segment.to_dict() for segment in segments)
"""

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from src import __version__
from src.core.config import PipelineConfig, config_hash
from src.core.logger import get_logger

logger = get_logger(__name__)

PROVENANCE_KEY = "_provenance"
CSV_PROVENANCE_PREFIX = "# provenance: "

# ==============================================================================
# PROVENANCE
# ==============================================================================

def build_provenance(config: PipelineConfig, artifact: str) -> Dict[str, Any]:
    """
    Provenance header for one artifact.

    The timestamp comes from environment.provenance_timestamp when pinned,
    otherwise the current UTC time.
    """
    timestamp = config.environment.provenance_timestamp
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")
    return {
        "artifact": artifact,
        "config_hash": config_hash(config),
        "timestamp": timestamp,
        "tool_version": __version__,
    }


def _dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, allow_nan=False)


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)

# ==============================================================================
# READERS
# ==============================================================================

def read_jsonl(path: Path) -> Tuple[Optional[Dict[str, Any]], List[Dict[str, Any]]]:
    """
    Read a JSONL artifact.

    Returns:
        (header, records): header is the first line's object when it carries
        a provenance key, else None (plain JSONL inputs such as gold files).
    """
    header: Optional[Dict[str, Any]] = None
    records: List[Dict[str, Any]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_number}: invalid JSON: {e}") from e
            if line_number == 1 and isinstance(data, dict) and PROVENANCE_KEY in data:
                header = data
                continue
            records.append(data)
    return header, records


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Read a CSV file as dict rows, skipping provenance/comment lines."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))

# ==============================================================================
# ARTIFACT WRITER CONTEXT MANAGER
# ==============================================================================

class ArtifactWriter:
    """
    Context manager for writing one artifact.

    Logs the start, completion (with record count) or failure of the write.
    On failure the partially written file is removed.

    Usage:
        with ArtifactWriter(config, path, stage="extraction") as artifact:
            artifact.write_jsonl(records)
    """

    def __init__(
        self,
        config: PipelineConfig,
        path: Path,
        stage: str = "artifacts",
    ):
        self.config = config
        self.path = Path(path)
        self.stage = stage
        self.records_written = 0
        self.provenance = build_provenance(config, self.path.name)

    def __enter__(self) -> "ArtifactWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        logger.debug(
            f"Writing artifact: {self.path}",
            extra={
                "stage": self.stage,
                "operation": "write_artifact",
                "file_path": str(self.path),
            }
        )
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            logger.info(
                f"Wrote artifact {self.path.name} ({self.records_written} records)",
                extra={
                    "stage": self.stage,
                    "operation": "write_artifact",
                    "file_path": str(self.path),
                    "status": "success",
                    "metadata": {"records": self.records_written},
                }
            )
        else:
            logger.error(
                f"Artifact write failed: {self.path} - {exc_val}",
                extra={
                    "stage": self.stage,
                    "operation": "write_artifact",
                    "file_path": str(self.path),
                    "status": "failed",
                    "error": str(exc_val),
                },
            )
            if self.path.exists():
                self.path.unlink()

        return False  # Don't suppress exceptions

    def write_jsonl(
        self,
        records: Iterable[Dict[str, Any]],
        header_extra: Optional[Dict[str, Any]] = None,
    ) -> int:
        """Write the provenance line (plus header_extra keys) and one record per line."""
        header: Dict[str, Any] = {PROVENANCE_KEY: self.provenance}
        if header_extra:
            header.update(header_extra)
        count = 0
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps(header) + "\n")
            for record in records:
                f.write(_dumps(record) + "\n")
                count += 1
        self.records_written = count
        return count

    def write_csv(self, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
        """Write a '# provenance:' comment line, the header row, then rows."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([_csv_cell(value) for value in row])
            count += 1
        with open(self.path, "w", encoding="utf-8", newline="") as f:
            f.write(CSV_PROVENANCE_PREFIX + _dumps(self.provenance) + "\n")
            f.write(buffer.getvalue())
        self.records_written = count
        return count

    def write_json(self, payload: Dict[str, Any]) -> None:
        """Write a single JSON document (reports) under a top-level provenance key."""
        document = {PROVENANCE_KEY: self.provenance}
        document.update(payload)
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(document, sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False) + "\n")
        self.records_written = 1

    def write_text(self, text: str) -> None:
        """Write a plain-text artifact (YAML query files) after a '# provenance:' line."""
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            f.write(CSV_PROVENANCE_PREFIX + _dumps(self.provenance) + "\n")
            f.write(text)
        self.records_written = 1
