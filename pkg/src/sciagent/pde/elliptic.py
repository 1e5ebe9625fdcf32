"""Five-point finite differences for the perforated-square Laplace and Helmholtz problems.

Hole boundaries use nearest-node Dirichlet data: every active node with an
excluded 4-neighbour carries the hole value.  This is first order in h near
the holes, which the self-convergence checks account for.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import Field, NodeKind, SingularSystem, circles, masked_grid

POISSON_BOX = (-0.5, 0.5)
POISSON_HOLES = circles((0.3, 0.3, 0.1), (-0.3, 0.3, 0.1), (0.3, -0.3, 0.1), (-0.3, -0.3, 0.1))
POISSON_RECT_VALUE = 1.0
POISSON_HOLE_VALUE = 0.0

HELMHOLTZ_BOX = (-1.0, 1.0)
HELMHOLTZ_HOLES = circles((0.5, 0.5, 0.2), (0.4, -0.4, 0.4), (-0.2, -0.7, 0.1), (-0.6, 0.5, 0.3))
HELMHOLTZ_RECT_VALUE = 0.2
HELMHOLTZ_HOLE_VALUE = 1.0
K = 8.0
A = 10.0
MU = (1.0, 4.0)

RESIDUAL_TOL = 1e-10


def helmholtz_forcing(x, y, a=A, mu=MU):
    """A * (mu1^2 + mu2^2 + x^2 + y^2) * sin(mu1 pi x) * sin(mu2 pi y)."""
    return a * (mu[0] ** 2 + mu[1] ** 2 + x**2 + y**2) * np.sin(mu[0] * np.pi * x) * np.sin(mu[1] * np.pi * y)


def _assemble(grid, shift: float, rhs_fn, rect_value: float, hole_value: float):
    """Matrix for ``-Lap u + shift u = f`` over the free (interior) nodes."""
    ny, nx = grid.shape
    h = grid.h
    kind = grid.kind
    free = kind == NodeKind.INTERIOR
    idx = -np.ones(kind.shape, dtype=np.int64)
    idx[free] = np.arange(int(free.sum()))
    u_fixed = np.zeros(kind.shape)
    u_fixed[kind == NodeKind.RECT_BOUNDARY] = rect_value
    u_fixed[kind == NodeKind.CIRCLE_BOUNDARY] = hole_value

    X, Y = np.meshgrid(grid.x, grid.y)
    jj, ii = np.nonzero(free)
    rows = [idx[jj, ii]]
    cols = [idx[jj, ii]]
    vals = [np.full(jj.size, 4.0 / h**2 + shift)]
    b = rhs_fn(X[jj, ii], Y[jj, ii]).astype(float)
    for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nj, ni = jj + dj, ii + di
        nb_free = free[nj, ni]
        rows.append(idx[jj[nb_free], ii[nb_free]])
        cols.append(idx[nj[nb_free], ni[nb_free]])
        vals.append(np.full(int(nb_free.sum()), -1.0 / h**2))
        fixed = ~nb_free
        # interior nodes never touch excluded nodes, so neighbours are free or Dirichlet
        b[fixed] += u_fixed[nj[fixed], ni[fixed]] / h**2
    m = int(free.sum())
    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )
    return M, b, free, u_fixed


def _solve(grid, shift, rhs_fn, rect_value, hole_value, name):
    M, b, free, u_fixed = _assemble(grid, shift, rhs_fn, rect_value, hole_value)
    try:
        sol = spla.spsolve(M.tocsc(), b)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("direct solve produced non-finite values")
    res = float(np.max(np.abs(M @ sol - b))) / max(1.0, float(np.max(np.abs(b))))
    if res > RESIDUAL_TOL:
        raise SingularSystem(f"relative residual {res:.2e} above {RESIDUAL_TOL}")
    u = u_fixed.copy()
    u[free] = sol
    active = grid.kind != NodeKind.EXCLUDED
    u[~active] = np.nan
    return Field(name, grid.x, u, y=grid.y, active=active,
                 meta={"residual": res, "n_free": int(free.sum()), "kind": grid.kind})


def solve_poisson(n: int) -> Field:
    """Laplace equation on [-0.5, 0.5]^2 minus four r=0.1 holes; u=1 outside, u=0 on holes."""
    grid = masked_grid(*POISSON_BOX, n, POISSON_HOLES)
    return _solve(grid, 0.0, lambda x, y: np.zeros_like(x), POISSON_RECT_VALUE, POISSON_HOLE_VALUE, "u")


def solve_helmholtz(n: int, k: float = K) -> Field:
    """-Lap u + k^2 u = f on [-1, 1]^2 minus four holes; u=0.2 outside, u=1 on holes."""
    grid = masked_grid(*HELMHOLTZ_BOX, n, HELMHOLTZ_HOLES)
    return _solve(grid, k * k, helmholtz_forcing, HELMHOLTZ_RECT_VALUE, HELMHOLTZ_HOLE_VALUE, "u")


def restrict_difference(coarse: Field, fine: Field) -> float:
    """Relative L2 gap between two nested-grid solutions on shared active nodes."""
    fc = fine.values[::2, ::2]
    both = coarse.active & fine.active[::2, ::2]
    c, f = coarse.values[both], fc[both]
    return math.sqrt(float(np.sum((c - f) ** 2)) / float(np.sum(f**2)))
