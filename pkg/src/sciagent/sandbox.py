"""Run generated code in its own working directory and collect solution files.

There is no OS-level jail: isolation is a private cwd, a filtered
environment, an output cap and a wall-clock kill of the whole process group.
"""

from __future__ import annotations

import os
import shlex
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .artifacts import Artifact, artifact_name, parse_artifacts

DEFAULT_TIMEOUT = 300.0
DEFAULT_MAX_OUTPUT = 1_000_000
ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "SYSTEMROOT", "PYTHONPATH",
                 "OMP_NUM_THREADS", "MPLBACKEND", "VIRTUAL_ENV")
SCRIPT_NAME = "main.py"
OUTPUT_MARKER = "\n[... output truncated at {n} bytes ...]\n"


class SpawnFailure(OSError):
    pass


class Status(str, Enum):
    OK = "ok"
    NONZERO_EXIT = "nonzero_exit"
    TIMEOUT = "timeout"
    SPAWN_FAILURE = "spawn_failure"


class Verdict(str, Enum):
    BUG = "bug"
    NAN = "nan"
    SUCCESS = "success"


@dataclass
class ExecutionLimits:
    workspace: str | Path
    wall_timeout: float = DEFAULT_TIMEOUT
    max_output_bytes: int = DEFAULT_MAX_OUTPUT
    interpreter_cmd: Sequence[str] | str = field(default_factory=lambda: [sys.executable, "{script}"])
    env_allowlist: Sequence[str] = ENV_ALLOWLIST
    extra_env: dict = field(default_factory=lambda: {"MPLBACKEND": "Agg"})
    attachments: Sequence[str | Path] = ()
    # workspace paths in tracebacks would make transcripts depend on the run directory
    redact_workspace: bool = True

    def __post_init__(self):
        if not self.wall_timeout > 0:
            raise ValueError("wall_timeout must be positive")


@dataclass
class ExecutionResult:
    status: Status
    exit_code: int | None
    stdout: str
    stderr: str
    artifacts: dict[str, str]
    wall_time: float

    def combined_output(self) -> str:
        parts = [self.stdout]
        if self.stderr:
            parts.append(self.stderr)
        if self.status is Status.TIMEOUT:
            parts.append("[process killed after exceeding the wall-clock limit]")
        return "\n".join(p for p in parts if p)

    def as_dict(self) -> dict:
        """Reproducible fields only (wall time is not recorded)."""
        return {"status": self.status.value, "exit_code": self.exit_code, "stdout": self.stdout,
                "stderr": self.stderr, "artifacts": sorted(self.artifacts)}


def _command(limits: ExecutionLimits, script: Path) -> list[str]:
    cmd = limits.interpreter_cmd
    parts = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
    if not any("{script}" in p for p in parts):
        parts.append("{script}")
    return [p.replace("{script}", str(script)) for p in parts]


def _environment(limits: ExecutionLimits) -> dict[str, str]:
    env = {k: os.environ[k] for k in limits.env_allowlist if k in os.environ}
    env.update({k: str(v) for k, v in limits.extra_env.items()})
    return env


class _Capture(threading.Thread):
    """Drain a pipe, keeping at most ``cap`` bytes."""

    def __init__(self, stream, cap: int):
        super().__init__(daemon=True)
        self.stream, self.cap = stream, cap
        self.buf = bytearray()
        self.dropped = 0

    def run(self):
        for chunk in iter(lambda: self.stream.read(65536), b""):
            room = self.cap - len(self.buf)
            if room > 0:
                self.buf += chunk[:room]
            self.dropped += max(0, len(chunk) - max(room, 0))
        self.stream.close()

    def text(self) -> str:
        out = self.buf.decode("utf-8", errors="replace")
        if self.dropped:
            out += OUTPUT_MARKER.format(n=self.cap)
        return out


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def collect_artifacts(workspace: str | Path) -> dict[str, str]:
    found = {}
    for p in sorted(Path(workspace).iterdir()):
        name = artifact_name(p)
        if name and p.is_file():
            found[name] = str(p)
    return found


def execute(code: str, limits: ExecutionLimits) -> ExecutionResult:
    ws = Path(limits.workspace).resolve()
    ws.mkdir(parents=True, exist_ok=True)
    if any(ws.iterdir()):
        raise ValueError(f"workspace {ws} is not empty")
    for src in limits.attachments:
        shutil.copy2(src, ws / Path(src).name)
    script = ws / SCRIPT_NAME
    script.write_text(code, encoding="utf-8")
    cmd = _command(limits, script)
    t0 = time.monotonic()
    try:
        proc = subprocess.Popen(cmd, cwd=ws, env=_environment(limits), stdin=subprocess.DEVNULL,
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE, start_new_session=True)
    except (FileNotFoundError, PermissionError) as exc:
        raise SpawnFailure(f"cannot start {cmd[0]!r}: {exc}") from exc
    out, err = _Capture(proc.stdout, limits.max_output_bytes), _Capture(proc.stderr, limits.max_output_bytes)
    out.start()
    err.start()
    timed_out = False
    try:
        proc.wait(timeout=limits.wall_timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        _kill_group(proc)
        proc.wait()
    else:
        # background grandchildren would otherwise keep the pipes open
        _kill_group(proc)
    out.join(5)
    err.join(5)
    wall = time.monotonic() - t0
    if timed_out:
        status = Status.TIMEOUT
    elif proc.returncode == 0:
        status = Status.OK
    else:
        status = Status.NONZERO_EXIT
    stdout, stderr = out.text(), err.text()
    if limits.redact_workspace:
        for root in sorted({str(ws), str(ws.resolve())}, key=len, reverse=True):
            stdout, stderr = stdout.replace(root, "."), stderr.replace(root, ".")
    return ExecutionResult(status, None if timed_out else proc.returncode, stdout, stderr,
                           collect_artifacts(ws), wall)


def spawn_failure_result(message: str) -> ExecutionResult:
    return ExecutionResult(Status.SPAWN_FAILURE, None, "", message, {}, 0.0)


def classify_execution(result: ExecutionResult, solutions: dict[str, Artifact] | None = None,
                       required: Sequence[str] = ()) -> Verdict:
    """``bug``: failed run or missing/unparsable required file; ``nan``: non-finite values."""
    if result.status is not Status.OK:
        return Verdict.BUG
    if solutions is None:
        solutions, _ = parse_artifacts(result.artifacts)
    if any(name not in solutions for name in required):
        return Verdict.BUG
    checked = [solutions[n] for n in required] if required else list(solutions.values())
    if any(not a.finite for a in checked):
        return Verdict.NAN
    return Verdict.SUCCESS


def scratch_workspace(prefix: str = "sciagent_") -> Path:
    return Path(tempfile.mkdtemp(prefix=prefix))

