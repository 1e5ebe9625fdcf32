"""Viscous Burgers on [-1, 1] x [0, 1] with u(x, 0) = -sin(pi x) and zero Dirichlet ends."""

from __future__ import annotations

import math

import numpy as np

from .fields import CFLViolation, Field

NU = 0.01 / math.pi
X_LO, X_HI = -1.0, 1.0
T_END = 1.0
CFL = 0.4


def initial_condition(x):
    return -np.sin(np.pi * x)


def stable_dt(h: float, umax: float = 1.0, nu: float = NU, cfl: float = CFL) -> float:
    return cfl * min(h / umax, h * h / (2.0 * nu))


def min_steps(nx: int, t_end: float = T_END) -> int:
    h = (X_HI - X_LO) / nx
    return math.ceil(t_end / stable_dt(h))


def _rhs(u, h, nu):
    """Local Lax-Friedrichs convective flux plus central diffusion; interior nodes only."""
    f = 0.5 * u * u
    a = np.maximum(np.abs(u[:-1]), np.abs(u[1:]))
    F = 0.5 * (f[:-1] + f[1:]) - 0.5 * a * (u[1:] - u[:-1])
    out = np.zeros_like(u)
    out[1:-1] = -(F[1:] - F[:-1]) / h + nu * (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    return out


def solve_burgers(nx: int, nt: int | None = None, n_snapshots: int = 101, t_end: float = T_END,
                  nu: float = NU) -> Field:
    """Space-time solution on ``nx`` intervals with ``nt`` Heun (RK2) steps.

    The returned field is 2D with ``x`` along columns and time stored in
    ``y``; snapshots are taken at the step nearest each of ``n_snapshots``
    equally spaced times.
    """
    x = np.linspace(X_LO, X_HI, nx + 1)
    h = x[1] - x[0]
    if nt is None:
        nt = min_steps(nx, t_end)
    dt = t_end / nt
    # the max principle bounds |u| by the initial maximum of 1
    if dt > stable_dt(h, nu=nu) * (1 + 1e-12):
        raise CFLViolation(
            f"nt={nt} gives dt={dt:.3e} above the stable limit {stable_dt(h, nu=nu):.3e}; "
            f"need nt >= {min_steps(nx, t_end)}"
        )
    u = initial_condition(x)
    u[0] = u[-1] = 0.0
    wanted = sorted({round(k * nt / (n_snapshots - 1)) for k in range(n_snapshots)})
    snaps, times = [u.copy()], [0.0]
    cursor = 1
    for step in range(1, nt + 1):
        k1 = _rhs(u, h, nu)
        u1 = u + dt * k1
        u = 0.5 * (u + u1 + dt * _rhs(u1, h, nu))
        if cursor < len(wanted) and step == wanted[cursor]:
            snaps.append(u.copy())
            times.append(step * dt)
            cursor += 1
    return Field("u", x, np.array(snaps), y=np.array(times), time=t_end,
                 meta={"nt": nt, "dt": dt, "nu": nu, "axes": ("x", "t")})


def final_profile(field: Field) -> np.ndarray:
    return field.values[-1]
