"""Artifact writers: CSV tables with a provenance block and gnuplot data files."""
import logging
import subprocess
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from models.request import RunConfig
from models.response import Provenance, TableArtifact

logger = logging.getLogger("asianhedge.artifacts")

TIMESTAMP_KEY = "timestamp"


def git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5, check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def make_provenance(config: RunConfig) -> Provenance:
    return Provenance(
        config_hash=config.config_hash(),
        seed=config.seed,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        git_revision=git_revision(),
    )


def make_artifact(table_id: str, frame: pd.DataFrame, config: RunConfig, status: str = "INFO",
                  note: Optional[str] = None) -> TableArtifact:
    return TableArtifact(
        table_id=table_id,
        rows=frame.to_dict(orient="records"),
        provenance=make_provenance(config),
        status=status,
        note=note,
    )


def _header(artifact: TableArtifact) -> str:
    p = artifact.provenance
    lines = [
        f"# table: {artifact.table_id}",
        f"# status: {artifact.status}",
        f"# config_hash: {p.config_hash}",
        f"# seed: {p.seed}",
        f"# git_revision: {p.git_revision}",
        f"# {TIMESTAMP_KEY}: {p.timestamp}",
    ]
    if artifact.note:
        lines.append(f"# note: {artifact.note}")
    return "\n".join(lines) + "\n"


def write_csv(artifact: TableArtifact, out_dir: Path) -> Path:
    """Header row, '.' decimals and '\\n' line endings, after the provenance comment lines."""
    path = Path(out_dir) / f"{artifact.table_id}.csv"
    frame = pd.DataFrame(artifact.rows)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(_header(artifact))
        frame.to_csv(fh, index=False, lineterminator="\n")
    logger.info(f"[Artifacts] wrote {path} ({len(frame)} rows)")
    return path


def write_dat(name: str, columns: Dict[str, Iterable[float]], out_dir: Path,
              provenance: Optional[Provenance] = None) -> Path:
    """Whitespace-separated columns for gnuplot, header as a comment."""
    path = Path(out_dir) / f"{name}.dat"
    data = np.column_stack([np.asarray(list(v), dtype=np.float64) for v in columns.values()])
    comments = []
    if provenance is not None:
        comments.append(f"config_hash={provenance.config_hash} seed={provenance.seed}")
    comments.append(" ".join(columns.keys()))
    np.savetxt(path, data, fmt="%.10g", header="\n".join(comments), comments="# ", newline="\n")
    return path


def strip_timestamp(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.startswith(f"# {TIMESTAMP_KEY}:"))


class ArtifactLog:
    """Collects the artifacts written during one command."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.artifacts: List[TableArtifact] = []
        self.paths: List[Path] = []

    def add(self, artifact: TableArtifact) -> Path:
        path = write_csv(artifact, self.out_dir)
        self.artifacts.append(artifact)
        self.paths.append(path)
        return path

    def failed(self) -> List[TableArtifact]:
        return [a for a in self.artifacts if a.status in ("FAIL", "ERROR")]
