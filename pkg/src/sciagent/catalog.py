"""Benchmark problems: description prompts plus the recipe used to grade answers."""

from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .prompts import PLACEHOLDER_NAMES


class Family(str, Enum):
    PDE = "pde"
    LINALG = "linalg"
    DIMENSIONAL = "dimensional"


class UnknownProblem(KeyError):
    pass


@dataclass(frozen=True)
class GradingRecipe:
    """How to turn a run's ``solution_*.csv`` files into an error number.

    ``kind`` is ``field`` (relative L2 against a PDE oracle, averaged over
    quantities), ``hilbert`` (worst L-infinity error against the all-ones
    vector over the swept sizes) or ``exponents`` (L-infinity distance of the
    canonical exponent vector from the keyhole group).
    """

    kind: str
    oracle: str
    artifacts: dict[str, str]
    threshold: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def required(self) -> tuple[str, ...]:
        return tuple(self.artifacts)


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    family: Family
    description: str
    grading: GradingRecipe
    attachments: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.description.strip():
            raise ValueError(f"{self.id}: empty description")
        for name in PLACEHOLDER_NAMES:
            if "{" + name + "}" in self.description:
                raise ValueError(f"{self.id}: description contains placeholder {{{name}}}")
        if self.family in (Family.LINALG, Family.DIMENSIONAL):
            if self.grading.threshold is None or not self.grading.threshold > 0:
                raise ValueError(f"{self.id}: threshold must be positive")


def _text(name: str) -> str:
    return resources.files("sciagent").joinpath("problems", f"{name}.txt").read_text(encoding="utf-8")


FIELD_1D = "1D field, columns x,value"
FIELD_2D = "2D field, columns x,y,value"
SPACE_TIME = "space-time field, columns x,y,value with y holding the time t"
HILBERT_SIZES = (5, 10, 15, 20, 25)


def _recipes() -> dict[str, tuple[Family, GradingRecipe]]:
    pde = Family.PDE
    return {
        "burgers": (pde, GradingRecipe("field", "burgers", {"u": SPACE_TIME}, params={"nx": 1024})),
        "sod": (pde, GradingRecipe(
            "field", "sod",
            {"rho": FIELD_1D + " at t=0.2", "u": FIELD_1D + " at t=0.2", "p": FIELD_1D + " at t=0.2"},
            params={"nodes": 1001},
        )),
        "poisson": (pde, GradingRecipe("field", "poisson", {"u": FIELD_2D}, params={"n": 256})),
        "helmholtz": (pde, GradingRecipe("field", "helmholtz", {"u": FIELD_2D}, params={"n": 256})),
        "lid_cavity": (pde, GradingRecipe(
            "field", "lid_cavity", {q: FIELD_2D for q in ("u", "v", "p")}, params={"n": 128},
        )),
        "unsteady_ns": (pde, GradingRecipe(
            "field", "unsteady_ns", {q: FIELD_2D + " at t=0.5" for q in ("u", "v", "p")},
            params={"n": 128},
        )),
        "hilbert": (Family.LINALG, GradingRecipe(
            "hilbert", "hilbert",
            {f"x_n{n}": f"vector, columns index,value: your most accurate solution for n={n}"
             for n in HILBERT_SIZES},
            threshold=1e-2,
        )),
        "keyhole": (Family.DIMENSIONAL, GradingRecipe(
            "exponents", "keyhole",
            {"exponents": "vector, columns index,value: the 7 exponents in the order "
             "etaP, Vs, r0, alpha, rho, Cp, Tl-T0"},
            threshold=1e-2,
        )),
    }


PROBLEM_IDS = tuple(_recipes())


def synthetic_keyhole_file(directory: str | Path | None = None, seed: int = 7,
                           noise_level: float = 0.05) -> Path:
    """Write a synthetic 90-row keyhole table; the real dataset is not distributed."""
    from .dimensional import dataset_to_csv, generate_synthetic

    directory = Path(directory or tempfile.mkdtemp(prefix="keyhole_"))
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "dataset_keyhole.csv"
    path.write_text(dataset_to_csv(generate_synthetic(seed=seed, noise_level=noise_level)))
    return path


def get_problem(problem_id: str, attachments: tuple[str, ...] | None = None) -> ProblemSpec:
    table = _recipes()
    if problem_id not in table:
        raise UnknownProblem(f"unknown problem {problem_id!r}; choose from {', '.join(table)}")
    family, recipe = table[problem_id]
    if attachments is None:
        attachments = (str(synthetic_keyhole_file()),) if problem_id == "keyhole" else ()
    return ProblemSpec(problem_id, family, _text(problem_id), recipe, tuple(attachments))
