"""Grids, masks and discretized fields shared by the reference solvers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np


class OracleError(RuntimeError):
    pass


class CFLViolation(OracleError):
    pass


class NotConverged(OracleError):
    def __init__(self, message: str, history: Sequence[float] = ()):
        super().__init__(message)
        self.history = list(history)


class GMRESStalled(NotConverged):
    pass


class SingularSystem(OracleError):
    pass


class NoConvergence(OracleError):
    pass


class NodeKind(IntEnum):
    INTERIOR = 0
    RECT_BOUNDARY = 1
    CIRCLE_BOUNDARY = 2
    EXCLUDED = 3


@dataclass(frozen=True)
class Circle:
    cx: Fraction
    cy: Fraction
    r: Fraction


def _frac(v) -> Fraction:
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def circles(*spec: tuple) -> tuple[Circle, ...]:
    return tuple(Circle(_frac(a), _frac(b), _frac(c)) for a, b, c in spec)


@dataclass(frozen=True)
class Grid1D:
    x: np.ndarray

    @classmethod
    def uniform(cls, a: float, b: float, n_intervals: int) -> "Grid1D":
        return cls(np.linspace(a, b, n_intervals + 1))

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])


@dataclass(frozen=True)
class Grid2D:
    """Uniform node grid; arrays are indexed ``[j, i]`` with ``y`` first."""

    x: np.ndarray
    y: np.ndarray
    kind: np.ndarray  # NodeKind per node, shape (ny, nx)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.y.size, self.x.size)

    @property
    def active(self) -> np.ndarray:
        return self.kind != NodeKind.EXCLUDED


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def excluded_mask(
    lo: Fraction, hi: Fraction, n: int, holes: Sequence[Circle], y_lo=None, y_hi=None, ny=None
) -> np.ndarray:
    """Nodes whose position lies strictly inside any hole, in exact arithmetic.

    Coordinates ``lo + i*(hi-lo)/n`` and the circle data are rational, so
    everything is scaled to a common integer denominator before squaring.
    """
    y_lo = lo if y_lo is None else y_lo
    y_hi = hi if y_hi is None else y_hi
    ny = n if ny is None else ny
    hx = (Fraction(hi) - Fraction(lo)) / n
    hy = (Fraction(y_hi) - Fraction(y_lo)) / ny
    mask = np.zeros((ny + 1, n + 1), dtype=bool)
    for c in holes:
        denom = 1
        for q in (Fraction(lo), hx, Fraction(y_lo), hy, c.cx, c.cy, c.r):
            denom = _lcm(denom, q.denominator)
        X = np.array(
            [int((Fraction(lo) + i * hx - c.cx) * denom) for i in range(n + 1)], dtype=object
        )
        Y = np.array(
            [int((Fraction(y_lo) + j * hy - c.cy) * denom) for j in range(ny + 1)], dtype=object
        )
        R2 = int(c.r * denom) ** 2
        d2 = (Y[:, None] ** 2 + X[None, :] ** 2).astype(object)
        mask |= np.array(d2 < R2, dtype=bool)
    return mask


def masked_grid(lo, hi, n: int, holes: Sequence[Circle]) -> Grid2D:
    """Square node grid with the rectangle edge, hole-adjacent Dirichlet nodes and holes tagged."""
    lo_f, hi_f = _frac(lo), _frac(hi)
    x = np.linspace(float(lo_f), float(hi_f), n + 1)
    excl = excluded_mask(lo_f, hi_f, n, holes)
    kind = np.full(excl.shape, NodeKind.INTERIOR, dtype=np.int8)
    kind[0, :] = kind[-1, :] = kind[:, 0] = kind[:, -1] = NodeKind.RECT_BOUNDARY
    near = np.zeros_like(excl)
    near[1:, :] |= excl[:-1, :]
    near[:-1, :] |= excl[1:, :]
    near[:, 1:] |= excl[:, :-1]
    near[:, :-1] |= excl[:, 1:]
    circ = near & ~excl & (kind == NodeKind.INTERIOR)
    kind[circ] = NodeKind.CIRCLE_BOUNDARY
    kind[excl] = NodeKind.EXCLUDED
    return Grid2D(x=x, y=x.copy(), kind=kind)


@dataclass
class Field:
    """Discrete solution values on a node grid.

    1D fields carry ``x`` only.  2D fields store a full ``(ny, nx)`` array
    with NaN at excluded nodes; ``y`` doubles as the time axis for
    space-time fields.
    """

    name: str
    x: np.ndarray
    values: np.ndarray
    y: np.ndarray | None = None
    active: np.ndarray | None = None
    time: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.y is not None

    def active_values(self) -> np.ndarray:
        if self.active is None:
            return self.values.ravel()
        return self.values[self.active]

    def points(self) -> np.ndarray:
        """Coordinates of the active nodes, row-major, shape (m, dim)."""
        if not self.is_2d:
            return self.x[:, None]
        X, Y = np.meshgrid(self.x, self.y)
        keep = np.ones_like(X, dtype=bool) if self.active is None else self.active
        return np.column_stack([X[keep], Y[keep]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if not self.is_2d:
            w.writerow(["x", "value"])
            for xi, vi in zip(self.x, self.values):
                w.writerow([repr(float(xi)), repr(float(vi))])
            return buf.getvalue()
        w.writerow(["x", "y", "value"])
        keep = np.ones(self.values.shape, dtype=bool) if self.active is None else self.active
        for j, yj in enumerate(self.y):
            for i, xi in enumerate(self.x):
                if keep[j, i]:
                    w.writerow([repr(float(xi)), repr(float(yj)), repr(float(self.values[j, i]))])
        return buf.getvalue()

    def write_csv(self, directory: str | Path, prefix: str = "solution_") -> Path:
        path = Path(directory) / f"{prefix}{self.name}.csv"
        path.write_text(self.to_csv())
        return path


def observed_order(e_coarse: float, e_fine: float) -> float:
    """log2 ratio of successive self-convergence differences."""
    if e_fine <= 0:
        return math.inf
    return math.log2(e_coarse / e_fine)
