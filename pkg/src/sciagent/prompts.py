"""Role templates for the Consultant, Programmer and Reviewer, plus code extraction."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .tokens import estimate_tokens

FENCE = "```"
DEFAULT_FENCE_LABEL = "python:"
PLACEHOLDER_NAMES = ("problem", "expansion", "solution", "feedback", "artifacts")
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDER_NAMES) + r")\}")


class PromptError(ValueError):
    pass


class MissingPlaceholder(PromptError):
    pass


class MissingContent(PromptError):
    pass


class NoCodeBlock(PromptError):
    pass


class Role(str, Enum):
    CONSULTANT = "consultant"
    PROGRAMMER_INITIAL = "programmer_initial"
    REVIEWER = "reviewer"
    PROGRAMMER_REVISE = "programmer_revise"


ROLE_SLOTS = {
    Role.CONSULTANT: ("problem",),
    Role.PROGRAMMER_INITIAL: ("problem", "expansion"),
    Role.REVIEWER: ("problem", "expansion", "solution"),
    Role.PROGRAMMER_REVISE: ("problem", "solution", "feedback"),
}


@dataclass(frozen=True)
class RoleTemplate:
    role: Role
    body: str
    fence_open: str = FENCE
    fence_close: str = FENCE

    def placeholders(self) -> list[str]:
        return _PLACEHOLDER_RE.findall(self.body)

    def render(self, **slots: str) -> str:
        """Single-pass substitution, so inserted text is never rescanned."""
        found = self.placeholders()
        for name in slots:
            if found.count(name) != 1:
                raise MissingPlaceholder(f"{self.role.value} template needs exactly one {{{name}}}")
        return _PLACEHOLDER_RE.sub(lambda m: slots.get(m.group(1), m.group(0)), self.body)


@dataclass(frozen=True)
class RenderedPrompt:
    role: Role
    text: str
    estimated_tokens: int

    @classmethod
    def of(cls, role: Role, text: str) -> "RenderedPrompt":
        return cls(role, text, estimate_tokens(text))


def _read(name: str) -> str:
    return resources.files("sciagent").joinpath("templates", name).read_text(encoding="utf-8")


def load_template(role: Role | str) -> RoleTemplate:
    role = Role(role)
    return RoleTemplate(role, _read(f"{role.value}.txt"))


def output_contract(artifacts: dict[str, str] | None) -> str:
    """The addendum that asks for ``solution_<name>.csv`` files."""
    if not artifacts:
        return ""
    lines = "\n".join(f"- solution_{name}.csv ({desc})" for name, desc in artifacts.items())
    return _PLACEHOLDER_RE.sub(lambda m: lines if m.group(1) == "artifacts" else m.group(0),
                               _read("output_contract.txt"))


def _need(value: str, what: str) -> str:
    if value is None or not str(value).strip():
        raise MissingContent(f"{what} is empty")
    return value


def _description(problem) -> str:
    return _need(getattr(problem, "description", problem), "problem description")


def _artifacts(problem) -> dict[str, str] | None:
    grading = getattr(problem, "grading", None)
    return getattr(grading, "artifacts", None) if grading is not None else None


def render_consultant(problem) -> RenderedPrompt:
    text = load_template(Role.CONSULTANT).render(problem=_description(problem))
    return RenderedPrompt.of(Role.CONSULTANT, text)


def render_programmer_initial(problem, expansion: str) -> RenderedPrompt:
    text = load_template(Role.PROGRAMMER_INITIAL).render(
        problem=_description(problem), expansion=_need(expansion, "consultant expansion")
    )
    return RenderedPrompt.of(Role.PROGRAMMER_INITIAL, text + output_contract(_artifacts(problem)))


def render_reviewer(problem, expansion: str, solution: str, run_output: str = "",
                    require_code: bool = True, label: str = DEFAULT_FENCE_LABEL) -> RenderedPrompt:
    """Reviewer prompt; ``solution`` is the Programmer response, ``run_output`` its printed output.

    ``require_code=False`` lets the pipeline forward a response whose code
    could not be extracted.
    """
    _need(solution, "programmer solution")
    if require_code:
        extract_code(solution, label)
    body = solution.rstrip("\n") + "\n\nExecution results:\n" + (run_output or "(no output)")
    text = load_template(Role.REVIEWER).render(
        problem=_description(problem), expansion=_need(expansion, "consultant expansion"), solution=body
    )
    return RenderedPrompt.of(Role.REVIEWER, text)


def render_programmer_revise(problem, prev_solution: str, feedback: str,
                             run_output: str | None = None) -> RenderedPrompt:
    prev = _need(prev_solution, "previous solution")
    if run_output is not None:
        prev = prev.rstrip("\n") + "\n\nExecution results:\n" + (run_output or "(no output)")
    text = load_template(Role.PROGRAMMER_REVISE).render(
        problem=_description(problem), solution=prev, feedback=_need(feedback, "reviewer feedback")
    )
    return RenderedPrompt.of(Role.PROGRAMMER_REVISE, text + output_contract(_artifacts(problem)))


_FENCE_LINE = re.compile(r"^[ \t]*```(.*)$", re.MULTILINE)


@dataclass(frozen=True)
class ExtractedCode:
    code: str
    block_count: int
    label: str


def find_blocks(response: str) -> list[tuple[str, str]]:
    """All ``(label, body)`` pairs of closed triple-backtick blocks, in order."""
    blocks = []
    marks = list(_FENCE_LINE.finditer(response))
    k = 0
    while k + 1 < len(marks):
        opening, closing = marks[k], marks[k + 1]
        label = opening.group(1).strip()
        body = response[opening.end() + 1 : closing.start()] if opening.end() < closing.start() else ""
        blocks.append((label, body))
        k += 2
    return blocks


def _label_matches(found: str, wanted: str) -> bool:
    a, b = found.rstrip(":").lower(), wanted.rstrip(":").lower()
    return a == b or a == ""


def _chomp(body: str) -> str:
    return body[:-1] if body.endswith("\n") else body


def extract_code_info(response: str, label: str = DEFAULT_FENCE_LABEL) -> ExtractedCode:
    """First block tagged with ``label`` (colon optional, bare fences accepted)."""
    blocks = find_blocks(response or "")
    if not blocks:
        raise NoCodeBlock("response contains no fenced code block")
    for found, body in blocks:
        if _label_matches(found, label):
            return ExtractedCode(_chomp(body), len(blocks), found)
    found, body = blocks[0]
    return ExtractedCode(_chomp(body), len(blocks), found)


def extract_code(response: str, label: str = DEFAULT_FENCE_LABEL) -> str:
    return extract_code_info(response, label).code


def wrap_in_fence(code: str, label: str = DEFAULT_FENCE_LABEL) -> str:
    return f"{FENCE}{label}\n{code}\n{FENCE}\n"
