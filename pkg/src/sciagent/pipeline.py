"""Consultant -> Programmer -> (Reviewer -> Programmer)* chains and sampling campaigns."""

from __future__ import annotations

import csv
import io
import json
import math
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import prompts
from .artifacts import parse_artifacts
from .catalog import ProblemSpec
from .gateway import CompletionRequest, Gateway, GatewayError, RoleAssignment
from .grading import grade_against_oracle
from .metrics import MetricReport, stage_metrics
from .sandbox import (ExecutionLimits, ExecutionResult, SpawnFailure, Verdict, classify_execution,
                      execute, spawn_failure_result)
from .tokens import TruncationPolicy, truncate_output

DEFAULT_REVIEWS = 2


def stage_name(k: int) -> str:
    return "answer0" if k == 0 else f"review{k}"


@dataclass
class SandboxConfig:
    wall_timeout: float = 300.0
    max_output_bytes: int = 1_000_000
    interpreter_cmd: list[str] | str | None = None

    def limits(self, workspace: Path, attachments) -> ExecutionLimits:
        kw = {} if self.interpreter_cmd is None else {"interpreter_cmd": self.interpreter_cmd}
        return ExecutionLimits(workspace, self.wall_timeout, self.max_output_bytes,
                               attachments=tuple(attachments), **kw)


@dataclass
class StageRecord:
    stage: str
    calls: list[dict] = field(default_factory=list)
    code: str | None = None
    block_count: int = 0
    extraction_error: str | None = None
    execution: ExecutionResult | None = None
    run_output: str = ""
    classification: Verdict = Verdict.BUG
    grade: dict | None = None
    error: float | None = None
    failure: str | None = None

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "calls": self.calls,
            "code": self.code,
            "block_count": self.block_count,
            "extraction_error": self.extraction_error,
            "execution": self.execution.as_dict() if self.execution else None,
            "classification": self.classification.value,
            "grade": self.grade,
            "failure": self.failure,
        }


@dataclass
class RunRecord:
    problem: str
    roles: RoleAssignment
    sample: int
    stages: list[StageRecord] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""
    aborted: str | None = None
    infrastructure_error: str | None = None

    def transcript_lines(self) -> list[str]:
        """One JSON object per stage; timestamps and wall times are left out for replayability."""
        out = []
        for st in self.stages:
            obj = {"problem": self.problem, "sample": self.sample, "roles": self.roles.as_dict(),
                   "aborted": self.aborted, **st.as_dict()}
            out.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
        return out

    def classification_at(self, k: int) -> Verdict:
        return self.stages[k].classification if k < len(self.stages) else Verdict.BUG

    def error_at(self, k: int) -> float | None:
        return self.stages[k].error if k < len(self.stages) else None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class _Chain:
    """State for one sample's run; every stage is appended even when it fails."""

    def __init__(self, problem, roles, gateway, sample, workdir, sandbox, policy, label):
        self.problem, self.roles, self.gateway = problem, roles, gateway
        self.sample, self.workdir, self.sandbox = sample, Path(workdir), sandbox
        self.policy, self.label = policy, label
        self.record = RunRecord(problem.id, roles, sample, started_at=_now())

    def ask(self, stage: StageRecord, role: str, prompt: prompts.RenderedPrompt) -> str:
        req = CompletionRequest(role, prompt.text, self.roles.for_role(role), self.sample)
        call = {"role": role, "template": prompt.role.value, "prompt": prompt.text,
                "estimated_tokens": prompt.estimated_tokens, "response": None}
        stage.calls.append(call)
        resp = self.gateway.complete(req)
        call["response"] = resp.text
        call["finish_reason"] = resp.finish_reason
        return resp.text

    def run_code(self, stage: StageRecord, response: str) -> None:
        try:
            info = prompts.extract_code_info(response, self.label)
        except prompts.NoCodeBlock as exc:
            stage.extraction_error = str(exc)
            stage.run_output = "(no code block found in the response)"
            return
        stage.code, stage.block_count = info.code, info.block_count
        ws = self.workdir / f"sample_{self.sample}" / stage.stage
        if ws.exists():
            shutil.rmtree(ws)
        try:
            result = execute(info.code, self.sandbox.limits(ws, self.problem.attachments))
        except SpawnFailure as exc:
            result = spawn_failure_result(str(exc))
            self.record.infrastructure_error = str(exc)
        stage.execution = result
        stage.run_output = truncate_output(result.combined_output(), self.policy)
        parsed, problems = parse_artifacts(result.artifacts)
        required = self.problem.grading.required
        stage.classification = classify_execution(result, parsed, required)
        if stage.classification is Verdict.NAN:
            stage.error = math.nan
            stage.grade = {"error": None, "note": "non-finite values in solution files"}
        elif stage.classification is Verdict.SUCCESS:
            grade = grade_against_oracle(parsed, self.problem.grading)
            stage.grade = grade.as_dict()
            stage.error = grade.error
        elif problems:
            stage.grade = {"error": None, "note": "; ".join(f"{k}: {v}" for k, v in sorted(problems.items()))}

    def solution_text(self, stage: StageRecord, response: str) -> str:
        return prompts.wrap_in_fence(stage.code, self.label) if stage.code is not None else response

    def run(self, reviews: int) -> RunRecord:
        rec = self.record
        stage = StageRecord("answer0")
        rec.stages.append(stage)
        try:
            expansion = self.ask(stage, "consultant", prompts.render_consultant(self.problem))
            response = self.ask(stage, "programmer",
                                prompts.render_programmer_initial(self.problem, expansion))
            self.run_code(stage, response)
            for k in range(1, reviews + 1):
                prev, prev_response = stage, response
                stage = StageRecord(stage_name(k))
                rec.stages.append(stage)
                solution = self.solution_text(prev, prev_response)
                feedback = self.ask(stage, "reviewer", prompts.render_reviewer(
                    self.problem, expansion, solution, prev.run_output, require_code=prev.code is not None,
                    label=self.label))
                response = self.ask(stage, "programmer", prompts.render_programmer_revise(
                    self.problem, solution, feedback, prev.run_output))
                self.run_code(stage, response)
        except GatewayError as exc:
            stage.failure = f"{type(exc).__name__}: {exc}"
            rec.aborted = stage.failure
            rec.infrastructure_error = stage.failure
        rec.finished_at = _now()
        return rec


def run_pipeline(problem: ProblemSpec, roles: RoleAssignment, gateway: Gateway, reviews: int = DEFAULT_REVIEWS,
                 sample: int = 0, workdir: str | Path | None = None, sandbox: SandboxConfig | None = None,
                 policy: TruncationPolicy | None = None, label: str = prompts.DEFAULT_FENCE_LABEL) -> RunRecord:
    if reviews < 0:
        raise ValueError("reviews must be >= 0")
    workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="sciagent_run_"))
    chain = _Chain(problem, roles, gateway, sample, workdir, sandbox or SandboxConfig(),
                   policy or gateway.policy, label)
    return chain.run(reviews)


@dataclass
class CampaignRecord:
    problem: str
    n_samples: int
    reviews: int
    runs: list[RunRecord]
    report: MetricReport

    def transcript(self) -> str:
        return "".join(line + "\n" for run in self.runs for line in run.transcript_lines())

    @property
    def infrastructure_errors(self) -> list[str]:
        return [r.infrastructure_error for r in self.runs if r.infrastructure_error]


def aggregate(problem: ProblemSpec, runs: list[RunRecord], reviews: int, programmer: str) -> MetricReport:
    stages = []
    for k in range(reviews + 1):
        stages.append(stage_metrics(
            stage_name(k),
            [r.classification_at(k) for r in runs],
            [r.error_at(k) for r in runs],
            problem.grading.threshold,
        ))
    return MetricReport(problem.id, programmer, stages)


def run_campaign(problem: ProblemSpec, roles: RoleAssignment, gateway: Gateway, reviews: int = DEFAULT_REVIEWS,
                 n_samples: int = 8, jobs: int = 1, workdir: str | Path | None = None,
                 sandbox: SandboxConfig | None = None, policy: TruncationPolicy | None = None,
                 label: str = prompts.DEFAULT_FENCE_LABEL,
                 on_run: Callable[[RunRecord], None] | None = None) -> CampaignRecord:
    """``n_samples`` independent chains, at most ``jobs`` at a time, merged in sample order."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="sciagent_campaign_"))

    def one(s: int) -> RunRecord:
        try:
            rec = run_pipeline(problem, roles, gateway, reviews, s, workdir, sandbox, policy, label)
        except Exception as exc:  # a crashed sample is data; the campaign goes on
            rec = RunRecord(problem.id, roles, s, aborted=f"{type(exc).__name__}: {exc}",
                            infrastructure_error=f"{type(exc).__name__}: {exc}")
        if on_run:
            on_run(rec)
        return rec

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        runs = sorted(pool.map(one, range(n_samples)), key=lambda r: r.sample)
    report = aggregate(problem, runs, reviews, roles.programmer.model)
    report.metadata["n_samples"] = n_samples
    report.metadata["reviews"] = reviews
    return CampaignRecord(problem.id, n_samples, reviews, runs, report)


def report_csv(report: MetricReport) -> str:
    rows = report.table_rows()
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


def write_campaign(campaign: CampaignRecord, out_dir: str | Path) -> dict[str, Path]:
    """Write ``transcripts/``, ``reports/`` and ``artifacts/`` under ``out_dir``."""
    out = Path(out_dir)
    paths = {}
    for sub in ("transcripts", "reports", "artifacts"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    paths["transcript"] = out / "transcripts" / f"{campaign.problem}.jsonl"
    paths["transcript"].write_text(campaign.transcript(), encoding="utf-8")
    paths["report_json"] = out / "reports" / f"{campaign.problem}.json"
    paths["report_json"].write_text(json.dumps(campaign.report.as_dict(), indent=2, sort_keys=True) + "\n")
    paths["report_csv"] = out / "reports" / f"{campaign.problem}.csv"
    paths["report_csv"].write_text(report_csv(campaign.report))
    for run in campaign.runs:
        for st in run.stages:
            if st.execution is None:
                continue
            for name, src in sorted(st.execution.artifacts.items()):
                dst = out / "artifacts" / f"{campaign.problem}_s{run.sample}_{st.stage}_{name}.csv"
                shutil.copyfile(src, dst)
    return paths
