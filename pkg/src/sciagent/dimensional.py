"""Dimensionless-group discovery for keyhole depth data.

Exponent vectors are kept as exact ``Fraction`` tuples so homogeneity is
checked without floating tolerance.  Candidates are enumerated over the
three-dimensional rational null space of the dimension matrix and ranked by
the log-log coefficient of determination.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

QUANTITIES = ("etaP", "Vs", "r0", "alpha", "rho", "Cp", "Tl-T0")
BASE_DIMENSIONS = ("M", "L", "T", "Theta")
DIMENSIONS = {
    "etaP": (1, 2, -3, 0),
    "Vs": (0, 1, -1, 0),
    "r0": (0, 1, 0, 0),
    "alpha": (0, 2, -1, 0),
    "rho": (1, -3, 0, 0),
    "Cp": (0, 2, -2, -1),
    "Tl-T0": (0, 0, 0, 1),
}
KEYHOLE_EXPONENTS = tuple(
    Fraction(v) for v in ("1", "-1/2", "-3/2", "-1/2", "-1", "-1", "-1")
)

CSV_HEADER = (
    "case", "source", "etaP", "Vs", "r0", "alpha", "rho", "Cp",
    "Tv-T0", "Lv", "Tl-T0", "Lm", "e", "Ke", "e*",
)
# 1-based input columns 3,4,5,6,7,8,11 and the last column as target
INPUT_COLUMNS = (2, 3, 4, 5, 6, 7, 10)
TARGET_COLUMN = 14


class DimensionalError(ValueError):
    pass


class SchemaMismatch(DimensionalError):
    pass


class NonPositiveValue(DimensionalError):
    def __init__(self, row: int, column: str, value: float):
        super().__init__(f"row {row}: {column} = {value!r} is not strictly positive")
        self.row = row
        self.column = column


class ZeroVector(DimensionalError):
    pass


class DegenerateFit(DimensionalError):
    pass


class EmptyNullSpace(DimensionalError):
    pass


ExponentVector = tuple  # tuple[Fraction, ...] in schema order


@dataclass(frozen=True)
class QuantitySchema:
    names: tuple = QUANTITIES
    dims: tuple = tuple(DIMENSIONS[q] for q in QUANTITIES)

    def matrix(self) -> list[list[Fraction]]:
        """Dimension matrix, one row per base dimension."""
        return [[Fraction(d[r]) for d in self.dims] for r in range(len(BASE_DIMENSIONS))]


SCHEMA = QuantitySchema()


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    A = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    ncols = len(A[0])
    for c in range(ncols):
        pr = next((k for k in range(r, len(A)) if A[k][c] != 0), None)
        if pr is None:
            continue
        A[r], A[pr] = A[pr], A[r]
        pv = A[r][c]
        A[r] = [a / pv for a in A[r]]
        for k in range(len(A)):
            if k != r and A[k][c] != 0:
                f = A[k][c]
                A[k] = [a - f * b for a, b in zip(A[k], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A, pivots


def rank(schema: QuantitySchema = SCHEMA) -> int:
    return len(_rref(schema.matrix())[1])


def null_space_basis(schema: QuantitySchema = SCHEMA) -> tuple[list[int], list[ExponentVector]]:
    """Free-variable positions and the matching exact null-space basis."""
    R, pivots = _rref(schema.matrix())
    n = len(schema.names)
    free = [c for c in range(n) if c not in pivots]
    if not free:
        raise EmptyNullSpace("dimension matrix has full column rank")
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        basis.append(tuple(v))
    return free, basis


def is_dimensionless(v: Sequence, schema: QuantitySchema = SCHEMA) -> bool:
    for row in schema.matrix():
        if sum(Fraction(a) * Fraction(b) for a, b in zip(row, v)) != 0:
            return False
    return True


def canonicalize(v: Sequence) -> ExponentVector:
    """Scale so the etaP exponent is +1, or else the first nonzero exponent."""
    v = tuple(Fraction(x) for x in v)
    pivot = next((x for x in v if x != 0), None)
    if pivot is None:
        raise ZeroVector("the zero vector has no canonical form")
    scale = v[0] if v[0] != 0 else pivot
    return tuple(x / scale for x in v)


def allowed_values(denominators: Iterable[int], bound: Fraction | int) -> list[Fraction]:
    bound = Fraction(bound)
    vals = set()
    for q in denominators:
        if q < 1:
            raise ValueError("denominators must be positive integers")
        top = math.floor(bound * q)
        vals.update(Fraction(p, q) for p in range(-top, top + 1))
    return sorted(vals)


def enumerate_candidates(
    schema: QuantitySchema = SCHEMA, denominators: Iterable[int] = (1, 2, 3), bound=3
) -> Iterator[ExponentVector]:
    """Yield every nonzero canonical dimensionless vector inside the exponent grid.

    A null vector is fixed by its free coordinates, so looping the free
    coordinates over the allowed values covers the whole grid exactly once.
    """
    values = allowed_values(tuple(denominators), bound)
    allowed = set(values)
    free, basis = null_space_basis(schema)
    for coeffs in itertools.product(values, repeat=len(free)):
        if all(c == 0 for c in coeffs):
            continue
        v = tuple(sum(c * b[k] for c, b in zip(coeffs, basis)) for k in range(len(schema.names)))
        if not all(x in allowed for x in v):
            continue
        if canonicalize(v) != v:
            continue
        yield v


# --- datasets -------------------------------------------------------------


@dataclass
class KeyholeDataset:
    inputs: np.ndarray  # (rows, 7) in schema order
    target: np.ndarray  # e*
    source: str = ""
    materials: list[str] = field(default_factory=list)

    @property
    def row_count(self) -> int:
        return int(self.target.size)


def _normalize(name: str) -> str:
    return name.strip().lower().replace(" ", "").replace("_", "")


def load_keyhole_csv(path: str | Path) -> KeyholeDataset:
    """Read the 15-column keyhole table (comma or whitespace separated)."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaMismatch(f"{path}: empty file")
    delimiter = "," if "," in lines[0] else None
    if delimiter:
        rows = list(csv.reader(lines))
    else:
        rows = [ln.split() for ln in lines]
    header = [h.strip() for h in rows[0]]
    if len(header) != len(CSV_HEADER) or [
        _normalize(h) for h in header
    ] != [_normalize(h) for h in CSV_HEADER]:
        raise SchemaMismatch(f"{path}: header {header} does not match {list(CSV_HEADER)}")
    inputs, target, materials = [], [], []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(CSV_HEADER):
            raise SchemaMismatch(f"{path}: row {r} has {len(row)} fields")
        try:
            vals = [float(row[c]) for c in INPUT_COLUMNS]
            e_star = float(row[TARGET_COLUMN])
        except ValueError as exc:
            raise SchemaMismatch(f"{path}: row {r}: {exc}") from exc
        for name, val in zip(QUANTITIES + ("e*",), vals + [e_star]):
            if not val > 0:
                raise NonPositiveValue(r, name, val)
        inputs.append(vals)
        target.append(e_star)
        materials.append(row[1].strip())
    return KeyholeDataset(
        inputs=np.array(inputs, dtype=float).reshape(-1, len(QUANTITIES)),
        target=np.array(target, dtype=float),
        source=str(path),
        materials=materials,
    )


# plausible ranges for laser powder bed / welding conditions
SYNTHETIC_RANGES = {
    "etaP": (20.0, 400.0),
    "Vs": (0.1, 2.0),
    "r0": (2e-5, 1e-4),
    "alpha": (4e-6, 6e-5),
    "rho": (2500.0, 8500.0),
    "Cp": (400.0, 1000.0),
    "Tl-T0": (500.0, 1800.0),
}


def group_values(inputs: np.ndarray, v: Sequence) -> np.ndarray:
    """Pi = prod(q_k ** v_k) evaluated row-wise in log space."""
    w = np.array([float(x) for x in v])
    return np.exp(np.log(inputs) @ w)


def generate_synthetic(
    n_rows: int = 90, beta: float = 1.0, noise_level: float = 0.05, seed: int = 0,
    coefficient: float = 0.5, exponents: Sequence = KEYHOLE_EXPONENTS,
) -> KeyholeDataset:
    rng = np.random.default_rng(seed)
    cols = []
    for q in QUANTITIES:
        lo, hi = SYNTHETIC_RANGES[q]
        cols.append(np.exp(rng.uniform(math.log(lo), math.log(hi), n_rows)))
    inputs = np.column_stack(cols)
    pi = group_values(inputs, exponents)
    eps = rng.normal(0.0, noise_level, n_rows) if noise_level > 0 else np.zeros(n_rows)
    target = coefficient * pi**beta * np.exp(eps)
    return KeyholeDataset(inputs=inputs, target=target, source=f"synthetic(seed={seed})")


# --- fitting ----------------------------------------------------------------


@dataclass
class CandidateFit:
    exponents: ExponentVector
    slope: float
    intercept: float
    r2: float
    pi: np.ndarray

    def exponent_strings(self) -> list[str]:
        return [str(Fraction(x)) for x in self.exponents]

    def as_dict(self) -> dict:
        return {
            "exponents": dict(zip(QUANTITIES, self.exponent_strings())),
            "r2": self.r2,
            "slope": self.slope,
            "intercept": self.intercept,
        }


def _loglog(logpi: np.ndarray, logy: np.ndarray) -> tuple[float, float, float]:
    if logpi.size < 2:
        raise DegenerateFit("need at least two rows")
    xm = logpi.mean()
    dx = logpi - xm
    sxx = float(dx @ dx)
    if sxx <= 1e-24 * max(1.0, float(logpi @ logpi)):
        raise DegenerateFit("Pi is constant across rows")
    ym = logy.mean()
    dy = logy - ym
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(dy @ dy)
    resid = dy - slope * dx
    ss_res = float(resid @ resid)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return slope, intercept, r2


def fit_loglog(dataset: KeyholeDataset, v: Sequence) -> CandidateFit:
    """Least squares of log e* against log Pi; R^2 on the log scale."""
    logpi = np.log(dataset.inputs) @ np.array([float(x) for x in v])
    slope, intercept, r2 = _loglog(logpi, np.log(dataset.target))
    return CandidateFit(tuple(Fraction(x) for x in v), slope, intercept, r2, np.exp(logpi))


@dataclass
class SearchResult:
    ranked: list[CandidateFit]
    n_candidates: int
    constraints: dict
    candidates: list[ExponentVector] = field(default_factory=list)

    def contains(self, v: Sequence) -> bool:
        """Whether the group ``v`` (any scaling) was among the enumerated candidates."""
        return canonicalize(v) in set(self.candidates)


def search_best(
    dataset: KeyholeDataset, denominators: Iterable[int] = (1, 2, 3), bound=3, top_k: int = 10,
    schema: QuantitySchema = SCHEMA,
) -> SearchResult:
    denominators = tuple(denominators)
    cands = list(enumerate_candidates(schema, denominators, bound))
    if not cands:
        return SearchResult([], 0, {"denominators": list(denominators), "bound": str(bound)}, [])
    W = np.array([[float(x) for x in v] for v in cands])  # (k, 7)
    L = np.log(dataset.inputs)
    logy = np.log(dataset.target)
    if dataset.row_count < 2:
        raise DegenerateFit("need at least two rows")
    X = L @ W.T  # (rows, k)
    dx = X - X.mean(axis=0)
    dy = logy - logy.mean()
    sxx = np.einsum("ij,ij->j", dx, dx)
    sxy = dx.T @ dy
    ss_tot = float(dy @ dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(sxx > 1e-24, (sxy * sxy) / (sxx * ss_tot), -np.inf)
    # descending r2, ties by lexicographic exponent order
    order = sorted(range(len(cands)), key=lambda k: (-r2[k], cands[k]))
    ranked = []
    for k in order[:top_k]:
        if not np.isfinite(r2[k]):
            continue
        ranked.append(fit_loglog(dataset, cands[k]))
    return SearchResult(
        ranked=ranked,
        n_candidates=len(cands),
        constraints={"denominators": list(denominators), "bound": str(bound),
                     "canonical": "etaP exponent = +1 (else first nonzero = +1)"},
        candidates=cands,
    )


def fit_curve_csv(fit: CandidateFit, dataset: KeyholeDataset) -> str:
    lines = ["Pi,e_star"]
    lines += [f"{p!r},{e!r}" for p, e in zip(fit.pi.tolist(), dataset.target.tolist())]
    return "\n".join(lines) + "\n"


def dataset_to_csv(dataset: KeyholeDataset) -> str:
    """Serialize in the 15-column input schema.

    Columns the search ignores (Tv-T0, Lv, Lm, e, Ke) hold placeholder
    values derived from the inputs so that the file parses back unchanged.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    materials = dataset.materials or ["Synth"] * dataset.row_count
    pi = group_values(dataset.inputs, KEYHOLE_EXPONENTS)
    for k in range(dataset.row_count):
        q = dataset.inputs[k]
        e_star = dataset.target[k]
        row = ["keyhole", materials[k], *[repr(float(x)) for x in q[:6]],
               repr(float(2.0 * q[6])), "9.25e+6", repr(float(q[6])), "2.86e+5",
               repr(float(e_star * 2.0 * q[2])), repr(float(pi[k])), repr(float(e_star))]
        w.writerow(row)
    return buf.getvalue()
