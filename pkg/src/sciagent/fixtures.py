"""Builders for scripted-backend fixture files.

A plan gives, per sample, the outcome of each stage: ``"bug"``, ``"nan"``,
``"nocode"`` or a float error that the generated program reproduces exactly
in its Hilbert solution files.  The programs use only the standard library
so that replaying a campaign stays fast.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence, Union

from .catalog import HILBERT_SIZES
from .prompts import wrap_in_fence

Outcome = Union[str, float]

CONSULTANT_REPLY = (
    "The Hilbert matrix is symmetric positive definite but its condition number grows "
    "exponentially with n.\nPlan 1: Tikhonov-regularized Cholesky.\nPlan 2: Jacobi-preconditioned "
    "conjugate gradients.\nPlan 3: truncated SVD."
)
REVIEWER_REPLY = (
    "(i) Check that every requested solution file is written.\n(ii) Guard against breakdown "
    "from round-off.\n(iii) Prefer a regularized factorization for n >= 15."
)


def hilbert_program(outcome: Outcome, sizes: Sequence[int] = HILBERT_SIZES) -> str:
    if outcome == "bug":
        return 'print("factorizing")\nraise ZeroDivisionError("zero pivot encountered")\n'
    value = "nan" if outcome == "nan" else None
    lines = ["# writes one solution vector per size", f"sizes = {list(sizes)}"]
    if value is None:
        err = float(outcome)
        lines.append(f"perturbation = {err!r}")
        lines.append("for n in sizes:")
        lines.append("    x = [1.0 + perturbation] + [1.0] * (n - 1)")
    else:
        lines.append("for n in sizes:")
        lines.append("    x = [float('nan')] * n")
    lines += [
        "    with open(f'solution_x_n{n}.csv', 'w') as fh:",
        "        fh.write('index,value\\n')",
        "        for i, xi in enumerate(x):",
        "            fh.write(f'{i},{xi!r}\\n')",
        "    print(f'n={n} done')",
    ]
    return "\n".join(lines) + "\n"


def programmer_reply(outcome: Outcome) -> str:
    if outcome == "nocode":
        return "I would use a regularized Cholesky factorization here."
    return "# Technical explanation content\n\n" + wrap_in_fence(hilbert_program(outcome))


def hilbert_fixture(plan: Sequence[Sequence[Outcome]]) -> list[dict]:
    """Records for ``len(plan)`` samples; Consultant and Reviewer replies are shared."""
    stages = max(len(p) for p in plan)
    records: list[dict] = [{"role": "consultant", "text": CONSULTANT_REPLY}]
    records += [{"role": "reviewer", "text": REVIEWER_REPLY} for _ in range(stages - 1)]
    for s, outcomes in enumerate(plan):
        for o in outcomes:
            records.append({"role": "programmer", "sample": s, "text": programmer_reply(o)})
    return records


def write_fixture(records: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records), encoding="utf-8")
    return path


# staged from bug-heavy to mostly successful: 2/8, 5/8, 7/8 execution success
DEMO_PLAN: tuple[tuple[Outcome, ...], ...] = (
    ("bug", 5e-3, 5e-3),
    ("bug", "bug", 5e-3),
    ("nan", 5e-3, 5e-3),
    ("nocode", 0.5, 5e-3),
    (5e-3, 5e-3, 0.5),
    ("bug", 0.5, 0.5),
    (0.5, "nan", 0.5),
    ("bug", "bug", "bug"),
)
