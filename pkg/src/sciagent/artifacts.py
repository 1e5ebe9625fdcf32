"""Reading the ``solution_<name>.csv`` files written by generated code."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ARTIFACT_RE = re.compile(r"^solution_(.+)\.csv$")
LAYOUTS = {("x", "value"): "1d", ("x", "y", "value"): "2d", ("index", "value"): "vector"}


class ArtifactError(ValueError):
    pass


@dataclass
class Artifact:
    name: str
    layout: str  # 1d | 2d | vector
    coords: np.ndarray  # (m, 1) or (m, 2)
    values: np.ndarray  # (m,)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def artifact_name(path: str | Path) -> str | None:
    m = ARTIFACT_RE.match(Path(path).name)
    return m.group(1) if m else None


def parse_artifact_text(name: str, text: str) -> Artifact:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ArtifactError(f"{name}: empty file")
    header = tuple(c.strip().lower() for c in rows[0])
    layout = LAYOUTS.get(header)
    if layout is None:
        raise ArtifactError(f"{name}: header {rows[0]} is not one of {[','.join(h) for h in LAYOUTS]}")
    if len(rows) < 2:
        raise ArtifactError(f"{name}: no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ArtifactError(f"{name}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ArtifactError(f"{name}: ragged rows")
    return Artifact(name, layout, data[:, :-1], data[:, -1])


def parse_artifact(path: str | Path) -> Artifact:
    path = Path(path)
    name = artifact_name(path) or path.stem
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"{name}: {exc}") from exc
    return parse_artifact_text(name, text)


def parse_artifacts(paths: dict[str, str | Path]) -> tuple[dict[str, Artifact], dict[str, str]]:
    """Parse every file; returns ``(parsed, problems)`` where ``problems`` maps name to message."""
    parsed, problems = {}, {}
    for name, path in paths.items():
        try:
            parsed[name] = parse_artifact(path)
        except ArtifactError as exc:
            problems[name] = str(exc)
    return parsed, problems
