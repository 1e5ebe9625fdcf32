"""Tokenizer-free length estimate and head+tail truncation of program output."""

from __future__ import annotations

import math
from dataclasses import dataclass

CHARS_PER_TOKEN = 4
# room kept free for the marker line so that truncation is idempotent
MARKER_RESERVE = 80
MARKER_TEMPLATE = "[... {n} characters elided ...]"


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text or "") / CHARS_PER_TOKEN)


@dataclass(frozen=True)
class TruncationPolicy:
    prompt_budget: int = 4500
    output_budget: int = 1500
    head_fraction: float = 0.5

    def __post_init__(self):
        if self.prompt_budget <= 0 or self.output_budget <= 0:
            raise ValueError("budgets must be positive")
        if self.output_budget * CHARS_PER_TOKEN <= 2 * MARKER_RESERVE:
            raise ValueError(f"output_budget must exceed {2 * MARKER_RESERVE // CHARS_PER_TOKEN} tokens")
        if not 0.0 < self.head_fraction < 1.0:
            raise ValueError("head_fraction must lie in (0, 1)")


def _head(text: str, limit: int) -> str:
    if limit <= 0:
        return ""
    cut = text.rfind("\n", 0, limit)
    return text[: cut + 1] if cut >= 0 else text[:limit]


def _tail(text: str, limit: int) -> str:
    if limit <= 0:
        return ""
    start = len(text) - limit
    if start <= 0:
        return text
    cut = text.find("\n", start - 1)
    if 0 <= cut < len(text) - 1:
        return text[cut + 1 :]
    return text[start:]


def truncate_output(run_output: str, policy: TruncationPolicy = TruncationPolicy()) -> str:
    """Keep whole lines from both ends of ``run_output`` so it fits ``output_budget``.

    A single line longer than its share is split mid-line.
    """
    text = run_output or ""
    if estimate_tokens(text) <= policy.output_budget:
        return text
    room = policy.output_budget * CHARS_PER_TOKEN - MARKER_RESERVE
    head = _head(text, int(room * policy.head_fraction))
    rest = text[len(head):]
    tail = _tail(rest, room - int(room * policy.head_fraction))
    elided = len(text) - len(head) - len(tail)
    sep = "" if head.endswith("\n") or not head else "\n"
    marker = MARKER_TEMPLATE.format(n=elided)
    return f"{head}{sep}{marker}\n{tail}"
