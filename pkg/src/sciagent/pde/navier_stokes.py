"""Incompressible Navier-Stokes reference solvers on a staggered (MAC) grid.

Layout for an ``nx`` by ``ny`` cell grid with spacing ``h``:

* ``u[j, i]`` lives on vertical faces ``x = i h``, ``y = (j + 1/2) h``, shape ``(ny, nx + 1)``
* ``v[j, i]`` lives on horizontal faces ``x = (i + 1/2) h``, ``y = j h``, shape ``(ny + 1, nx)``
* ``p[j, i]`` lives at cell centres, shape ``(ny, nx)``

Outputs are interpolated to the ``(ny + 1, nx + 1)`` node lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import CFLViolation, Field, GMRESStalled, NotConverged

RE = 100.0
CFL = 0.4

CAVITY_SIZE = 2.0
LID_ALPHA = 2.0
STEADY_TOL = 1e-8

CHANNEL_LENGTH = 2.0
CHANNEL_HEIGHT = 1.0
T_FINAL = 0.5
GMRES_RESTART = 50
GMRES_MAXITER = 500
GMRES_TOL = 1e-8


def lid_velocity(x, alpha: float = LID_ALPHA):
    return alpha * x * (1.0 - x)


def inlet_velocity(y, t):
    return np.sin(np.pi * y) * (np.sin(np.pi * t) + np.sin(3 * np.pi * t) + np.sin(5 * np.pi * t))


def inlet_acceleration(y, t):
    w = np.pi * t
    return np.pi * np.sin(np.pi * y) * (np.cos(w) + 3 * np.cos(3 * w) + 5 * np.cos(5 * w))


def body_force_y(x, y, t):
    return -np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * t)


# --- node-lattice interpolation ----------------------------------------------


def _nodal_u(u: np.ndarray, bottom, top) -> np.ndarray:
    ny = u.shape[0]
    out = np.empty((ny + 1, u.shape[1]))
    out[1:-1] = 0.5 * (u[:-1] + u[1:])
    out[0] = bottom
    out[-1] = top
    return out


def _nodal_v(v: np.ndarray, left, right) -> np.ndarray:
    nx = v.shape[1]
    out = np.empty((v.shape[0], nx + 1))
    out[:, 1:-1] = 0.5 * (v[:, :-1] + v[:, 1:])
    out[:, 0] = left
    out[:, -1] = right
    return out


def _nodal_p(p: np.ndarray) -> np.ndarray:
    """Average of the cells touching each node."""
    ny, nx = p.shape
    acc = np.zeros((ny + 1, nx + 1))
    cnt = np.zeros((ny + 1, nx + 1))
    for dj in (0, 1):
        for di in (0, 1):
            acc[dj : dj + ny, di : di + nx] += p
            cnt[dj : dj + ny, di : di + nx] += 1
    return acc / cnt


def mac_divergence(u: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    return (u[:, 1:] - u[:, :-1] + v[1:, :] - v[:-1, :]) / h


# --- steady lid-driven cavity -------------------------------------------------


class _Assembler:
    """Collects COO triplets for one block row."""

    def __init__(self):
        self.r, self.c, self.v = [], [], []

    def add(self, rows, cols, vals):
        rows = np.asarray(rows).ravel()
        cols = np.asarray(cols).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        self.r.append(rows)
        self.c.append(cols)
        self.v.append(vals)

    def matrix(self, shape):
        if not self.r:
            return sp.csr_matrix(shape)
        return sp.csr_matrix(
            (np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=shape
        )


@dataclass
class _CavityOps:
    """Affine operators ``M @ z + g`` for the cavity unknowns."""

    n: int
    h: float
    Gx_u: sp.csr_matrix
    Gy_u: sp.csr_matrix
    gy_u: np.ndarray
    L_u: sp.csr_matrix
    l_u: np.ndarray
    P_vu: sp.csr_matrix
    Gx_v: sp.csr_matrix
    Gy_v: sp.csr_matrix
    L_v: sp.csr_matrix
    P_uv: sp.csr_matrix
    Dpx: sp.csr_matrix
    Dpy: sp.csr_matrix
    Div_u: sp.csr_matrix
    Div_v: sp.csr_matrix


def _cavity_ops(n: int, length: float, alpha: float) -> _CavityOps:
    h = length / n
    # unknown u faces: i = 1..n-1, j = 0..n-1 ; unknown v faces: i = 0..n-1, j = 1..n-1
    nu_i, nv_j = n - 1, n - 1
    Nu, Nv, Np = nu_i * n, n * nv_j, n * n

    def uid(j, i):  # i in 1..n-1
        return j * nu_i + (i - 1)

    def vid(j, i):  # j in 1..n-1
        return (j - 1) * n + i

    def pid(j, i):
        return j * n + i

    ju, iu = np.meshgrid(np.arange(n), np.arange(1, n), indexing="ij")
    ju, iu = ju.ravel(), iu.ravel()
    ru = uid(ju, iu)
    jv, iv = np.meshgrid(np.arange(1, n), np.arange(n), indexing="ij")
    jv, iv = jv.ravel(), iv.ravel()
    rv = vid(jv, iv)
    x_u = iu * h
    lid = lid_velocity(x_u, alpha)

    # u-face operators
    gx, gy, lap, pvu = _Assembler(), _Assembler(), _Assembler(), _Assembler()
    gy_u = np.zeros(Nu)
    l_u = np.zeros(Nu)
    east = iu + 1 <= n - 1
    west = iu - 1 >= 1
    gx.add(ru[east], uid(ju[east], iu[east] + 1), 0.5 / h)
    gx.add(ru[west], uid(ju[west], iu[west] - 1), -0.5 / h)
    lap.add(ru, ru, -4.0 / h**2)
    lap.add(ru[east], uid(ju[east], iu[east] + 1), 1.0 / h**2)
    lap.add(ru[west], uid(ju[west], iu[west] - 1), 1.0 / h**2)
    north = ju + 1 <= n - 1
    south = ju - 1 >= 0
    gy.add(ru[north], uid(ju[north] + 1, iu[north]), 0.5 / h)
    gy.add(ru[south], uid(ju[south] - 1, iu[south]), -0.5 / h)
    lap.add(ru[north], uid(ju[north] + 1, iu[north]), 1.0 / h**2)
    lap.add(ru[south], uid(ju[south] - 1, iu[south]), 1.0 / h**2)
    # top ghost: u_N = 2 U_lid - u ; bottom ghost: u_S = -u
    top = ~north
    gy.add(ru[top], ru[top], -0.5 / h)
    gy_u[ru[top]] += 2.0 * lid[top] * 0.5 / h
    lap.add(ru[top], ru[top], -1.0 / h**2)
    l_u[ru[top]] += 2.0 * lid[top] / h**2
    bot = ~south
    gy.add(ru[bot], ru[bot], 0.5 / h)
    lap.add(ru[bot], ru[bot], -1.0 / h**2)
    # v averaged onto u faces from the four surrounding v faces (wall faces are zero)
    for dj in (0, 1):
        for di in (-1, 0):
            jj, ii = ju + dj, iu + di
            ok = (jj >= 1) & (jj <= n - 1)
            pvu.add(ru[ok], vid(jj[ok], ii[ok]), 0.25)

    # v-face operators
    gxv, gyv, lapv, puv = _Assembler(), _Assembler(), _Assembler(), _Assembler()
    east = iv + 1 <= n - 1
    west = iv - 1 >= 0
    gxv.add(rv[east], vid(jv[east], iv[east] + 1), 0.5 / h)
    gxv.add(rv[west], vid(jv[west], iv[west] - 1), -0.5 / h)
    lapv.add(rv, rv, -4.0 / h**2)
    lapv.add(rv[east], vid(jv[east], iv[east] + 1), 1.0 / h**2)
    lapv.add(rv[west], vid(jv[west], iv[west] - 1), 1.0 / h**2)
    # side ghosts: v = -v_interior
    gxv.add(rv[~east], rv[~east], -0.5 / h)
    lapv.add(rv[~east], rv[~east], -1.0 / h**2)
    gxv.add(rv[~west], rv[~west], 0.5 / h)
    lapv.add(rv[~west], rv[~west], -1.0 / h**2)
    north = jv + 1 <= n - 1
    south = jv - 1 >= 1
    gyv.add(rv[north], vid(jv[north] + 1, iv[north]), 0.5 / h)
    gyv.add(rv[south], vid(jv[south] - 1, iv[south]), -0.5 / h)
    lapv.add(rv[north], vid(jv[north] + 1, iv[north]), 1.0 / h**2)
    lapv.add(rv[south], vid(jv[south] - 1, iv[south]), 1.0 / h**2)
    for dj in (-1, 0):
        for di in (0, 1):
            jj, ii = jv + dj, iv + di
            ok = (ii >= 1) & (ii <= n - 1)
            puv.add(rv[ok], uid(jj[ok], ii[ok]), 0.25)

    # pressure gradients and divergence
    dpx, dpy = _Assembler(), _Assembler()
    dpx.add(ru, pid(ju, iu), 1.0 / h)
    dpx.add(ru, pid(ju, iu - 1), -1.0 / h)
    dpy.add(rv, pid(jv, iv), 1.0 / h)
    dpy.add(rv, pid(jv - 1, iv), -1.0 / h)
    Dpx = dpx.matrix((Nu, Np))
    Dpy = dpy.matrix((Nv, Np))
    return _CavityOps(
        n=n, h=h,
        Gx_u=gx.matrix((Nu, Nu)), Gy_u=gy.matrix((Nu, Nu)), gy_u=gy_u,
        L_u=lap.matrix((Nu, Nu)), l_u=l_u, P_vu=pvu.matrix((Nu, Nv)),
        Gx_v=gxv.matrix((Nv, Nv)), Gy_v=gyv.matrix((Nv, Nv)),
        L_v=lapv.matrix((Nv, Nv)), P_uv=puv.matrix((Nv, Nu)),
        Dpx=Dpx, Dpy=Dpy,
        # discrete divergence is minus the adjoint of the gradient
        Div_u=(-Dpx.T).tocsr(), Div_v=(-Dpy.T).tocsr(),
    )


def _split(z, ops):
    Nu = ops.Gx_u.shape[0]
    Nv = ops.Gx_v.shape[0]
    return z[:Nu], z[Nu : Nu + Nv], z[Nu + Nv :]


def _cavity_residual(z, ops, re):
    u, v, p = _split(z, ops)
    dux = ops.Gx_u @ u
    duy = ops.Gy_u @ u + ops.gy_u
    dvx = ops.Gx_v @ v
    dvy = ops.Gy_v @ v
    Ru = u * dux + (ops.P_vu @ v) * duy + ops.Dpx @ p - (ops.L_u @ u + ops.l_u) / re
    Rv = (ops.P_uv @ u) * dvx + v * dvy + ops.Dpy @ p - (ops.L_v @ v) / re
    Rc = ops.Div_u @ u + ops.Div_v @ v
    Rc[0] = p[0]  # gauge row replaces the continuity equation of cell (0, 0)
    return np.concatenate([Ru, Rv, Rc])


def _cavity_jacobian(z, ops, re, shift=0.0):
    u, v, p = _split(z, ops)
    D = sp.diags
    dux = ops.Gx_u @ u
    duy = ops.Gy_u @ u + ops.gy_u
    dvx = ops.Gx_v @ v
    dvy = ops.Gy_v @ v
    va = ops.P_vu @ v
    ua = ops.P_uv @ u
    Juu = D(u) @ ops.Gx_u + D(dux) + D(va) @ ops.Gy_u - ops.L_u / re
    Juv = D(duy) @ ops.P_vu
    Jvu = D(dvx) @ ops.P_uv
    Jvv = D(ua) @ ops.Gx_v + D(v) @ ops.Gy_v + D(dvy) - ops.L_v / re
    Nu, Nv = Juu.shape[0], Jvv.shape[0]
    Np = ops.Dpx.shape[1]
    Cu = ops.Div_u.tolil()
    Cv = ops.Div_v.tolil()
    Cu[0, :] = 0
    Cv[0, :] = 0
    gauge = sp.lil_matrix((Np, Np))
    gauge[0, 0] = 1.0
    if shift:
        Juu = Juu + shift * sp.identity(Nu)
        Jvv = Jvv + shift * sp.identity(Nv)
    return sp.bmat(
        [[Juu, Juv, ops.Dpx], [Jvu, Jvv, ops.Dpy], [Cu.tocsr(), Cv.tocsr(), gauge.tocsr()]],
        format="csc",
    )


@dataclass
class CavityResult:
    u: Field
    v: Field
    p: Field
    residual_history: list[float] = field(default_factory=list)
    max_divergence: float = math.nan
    faces: tuple = ()


def solve_lid_cavity(n: int = 64, re: float = RE, tol: float = STEADY_TOL, max_iter: int = 60,
                     alpha: float = LID_ALPHA, length: float = CAVITY_SIZE) -> CavityResult:
    """Steady cavity flow by pseudo-transient continuation with Newton linearization.

    Each pseudo-time step solves ``(J + I/dtau) dz = -R`` for the coupled
    velocity-pressure system; ``dtau`` grows as the residual falls
    (switched evolution relaxation) so the iteration becomes Newton's
    method near the steady state.
    """
    ops = _cavity_ops(n, length, alpha)
    Nu, Nv, Np = ops.Gx_u.shape[0], ops.Gx_v.shape[0], ops.Dpx.shape[1]
    z = np.zeros(Nu + Nv + Np)
    R = _cavity_residual(z, ops, re)
    rnorm = float(np.max(np.abs(R)))
    history = [rnorm]
    dtau = 1.0
    for _ in range(max_iter):
        if rnorm <= tol:
            break
        J = _cavity_jacobian(z, ops, re, shift=1.0 / dtau if math.isfinite(dtau) else 0.0)
        dz = spla.spsolve(J, -R)
        z_new = z + dz
        R_new = _cavity_residual(z_new, ops, re)
        rn_new = float(np.max(np.abs(R_new)))
        if not math.isfinite(rn_new) or rn_new > 10 * rnorm:
            dtau *= 0.25
            continue
        dtau = min(dtau * max(rnorm / max(rn_new, 1e-300), 0.5), 1e12)
        z, R, rnorm = z_new, R_new, rn_new
        history.append(rnorm)
    if rnorm > tol:
        raise NotConverged(f"steady residual {rnorm:.2e} above {tol:.0e}", history)

    u_int, v_int, p = _split(z, ops)
    h = ops.h
    u = np.zeros((n, n + 1))
    u[:, 1:-1] = u_int.reshape(n, n - 1)
    v = np.zeros((n + 1, n))
    v[1:-1, :] = v_int.reshape(n - 1, n)
    pc = p.reshape(n, n)
    div = mac_divergence(u, v, h)

    xs = np.linspace(0.0, length, n + 1)
    un = _nodal_u(u, 0.0, lid_velocity(xs, alpha))
    vn = _nodal_v(v, 0.0, 0.0)
    pn = _nodal_p(pc)
    pn = pn - pn[0, 0]
    meta = {"re": re, "n": n, "h": h, "iterations": len(history) - 1}
    mk = lambda name, vals: Field(name, xs, vals, y=xs.copy(), meta=meta)
    return CavityResult(
        u=mk("u", un), v=mk("v", vn), p=mk("p", pn),
        residual_history=history, max_divergence=float(np.max(np.abs(div))),
        faces=(u, v, pc),
    )


# --- unsteady channel flow ------------------------------------------------------


def _pressure_laplacian(nx: int, ny: int, h: float) -> sp.csr_matrix:
    """Cell-centred Laplacian: Neumann on walls and inlet, phi = 0 on the outlet face."""
    N = nx * ny
    idx = np.arange(N).reshape(ny, nx)
    a = _Assembler()
    diag = np.zeros((ny, nx))
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
        nj, ni = jj + dj, ii + di
        inside = (nj >= 0) & (nj < ny) & (ni >= 0) & (ni < nx)
        a.add(idx[inside], idx[nj[inside], ni[inside]], 1.0 / h**2)
        diag += inside / h**2
    diag[:, -1] += 2.0 / h**2  # Dirichlet face at half a cell
    a.add(idx.ravel(), idx.ravel(), -diag.ravel())
    return a.matrix((N, N))


def pressure_preconditioner(L: sp.csr_matrix, kind: str):
    """Jacobi scaling or an incomplete LU factor wrapped as a linear operator."""
    if kind == "jacobi":
        return sp.diags(1.0 / L.diagonal())
    if kind == "ilu":
        ilu = spla.spilu(L.tocsc(), drop_tol=1e-5, fill_factor=20)
        return spla.LinearOperator(L.shape, ilu.solve)
    if kind == "none":
        return None
    raise ValueError(f"unknown preconditioner {kind!r}")


@dataclass
class ChannelResult:
    u: Field
    v: Field
    p: Field
    max_divergence: float
    steps: int
    dt: float
    gmres_iterations: list[int] = field(default_factory=list)
    divergence_history: list[float] = field(default_factory=list)
    faces: tuple = ()


class ChannelFlow:
    """Chorin projection for the forced channel with a pulsating inlet."""

    def __init__(self, n: int, re: float = RE, preconditioner: str = "ilu"):
        self.n = n
        self.re = re
        self.nx, self.ny = int(round(CHANNEL_LENGTH * n)), int(round(CHANNEL_HEIGHT * n))
        self.h = CHANNEL_HEIGHT / n
        h = self.h
        self.yc = (np.arange(self.ny) + 0.5) * h
        self.xc = (np.arange(self.nx) + 0.5) * h
        self.xf = np.arange(self.nx + 1) * h
        self.yf = np.arange(self.ny + 1) * h
        self.L = _pressure_laplacian(self.nx, self.ny, h)
        self.M = pressure_preconditioner(self.L, preconditioner)
        self.phi = np.zeros(self.nx * self.ny)
        self.gmres_iterations: list[int] = []
        self.divergence_history: list[float] = []

    def apply_bc(self, u, v, t):
        u[:, 0] = inlet_velocity(self.yc, t)
        u[:, -1] = u[:, -2]
        v[0, :] = 0.0
        v[-1, :] = 0.0

    def tendency(self, u, v, t):
        """Explicit advection, diffusion and forcing on interior and outlet faces."""
        h, re = self.h, self.re
        # u with ghosts in y (no-slip walls)
        ug = np.vstack([-u[:1], u, -u[-1:]])
        du = np.zeros_like(u)
        uc = u[:, 1:-1]
        ux = (u[:, 2:] - u[:, :-2]) / (2 * h)
        uy = (ug[2:, 1:-1] - ug[:-2, 1:-1]) / (2 * h)
        va = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, :-1] + v[1:, 1:])
        lap_u = (u[:, 2:] + u[:, :-2] + ug[2:, 1:-1] + ug[:-2, 1:-1] - 4 * uc) / h**2
        du[:, 1:-1] = -(uc * ux + va * uy) + lap_u / re

        # v with ghosts in x: inlet v = 0 (reflect), outlet zero gradient (copy)
        vg = np.hstack([-v[:, :1], v, v[:, -1:]])
        dv = np.zeros_like(v)
        vc = v[1:-1, :]
        vx = (vg[1:-1, 2:] - vg[1:-1, :-2]) / (2 * h)
        vy = (v[2:, :] - v[:-2, :]) / (2 * h)
        ua = 0.25 * (u[:-1, :-1] + u[:-1, 1:] + u[1:, :-1] + u[1:, 1:])
        lap_v = (vg[1:-1, 2:] + vg[1:-1, :-2] + v[2:, :] + v[:-2, :] - 4 * vc) / h**2
        X, Y = np.meshgrid(self.xc, self.yf[1:-1])
        dv[1:-1, :] = -(ua * vx + vc * vy) + lap_v / re + body_force_y(X, Y, t)
        return du, dv

    def project(self, u, v):
        """Remove the gradient part so the MAC divergence vanishes; returns phi."""
        h = self.h
        rhs = mac_divergence(u, v, h).ravel()
        x0 = self.phi
        counter = [0]

        def cb(_):
            counter[0] += 1

        phi, info = spla.gmres(
            self.L, rhs, x0=x0, rtol=GMRES_TOL, atol=GMRES_TOL * 1e-2, restart=GMRES_RESTART,
            maxiter=GMRES_MAXITER, M=self.M, callback=cb, callback_type="pr_norm",
        )
        if info != 0:
            raise GMRESStalled(f"GMRES returned info={info} after {counter[0]} iterations")
        self.gmres_iterations.append(counter[0])
        self.phi = phi
        P = phi.reshape(self.ny, self.nx)
        u[:, 1:-1] -= (P[:, 1:] - P[:, :-1]) / h
        u[:, -1] -= (0.0 - P[:, -1]) / (0.5 * h)
        v[1:-1, :] -= (P[1:, :] - P[:-1, :]) / h
        div = float(np.max(np.abs(mac_divergence(u, v, h))))
        self.divergence_history.append(div)
        return P

    def stable_dt(self, umax: float) -> float:
        h = self.h
        return CFL * min(h / max(umax, 1e-12), 0.25 * h * h * self.re)


def solve_unsteady_ns(n: int = 64, dt: float | None = None, t_final: float = T_FINAL,
                      re: float = RE, preconditioner: str = "ilu") -> ChannelResult:
    """Velocity and pressure at ``t_final`` on a ``2n x n`` MAC grid.

    Time integration is SSP-RK2 with a projection after each stage.
    """
    flow = ChannelFlow(n, re, preconditioner)
    h = flow.h
    # inlet amplitude bound: |sin a + sin 3a + sin 5a| <= 3; interior speeds stay below it
    umax_bound = 3.0
    limit = flow.stable_dt(umax_bound)
    if dt is None:
        steps = math.ceil(t_final / limit)
    else:
        if dt > limit * (1 + 1e-12):
            raise CFLViolation(f"dt={dt:.3e} above stable limit {limit:.3e}")
        steps = math.ceil(t_final / dt - 1e-9)
    dt = t_final / steps
    u = np.zeros((flow.ny, flow.nx + 1))
    v = np.zeros((flow.ny + 1, flow.nx))
    flow.apply_bc(u, v, 0.0)
    P = np.zeros((flow.ny, flow.nx))
    t = 0.0
    for k in range(steps):
        t1 = (k + 1) * dt
        du, dv = flow.tendency(u, v, t)
        u1, v1 = u + dt * du, v + dt * dv
        flow.apply_bc(u1, v1, t1)
        flow.project(u1, v1)
        du1, dv1 = flow.tendency(u1, v1, t1)
        u2 = 0.5 * (u + u1 + dt * du1)
        v2 = 0.5 * (v + v1 + dt * dv1)
        flow.apply_bc(u2, v2, t1)
        P = flow.project(u2, v2)
        u, v, t = u2, v2, t1
        if not np.isfinite(u).all():
            raise CFLViolation(f"non-finite velocity at step {k + 1}")
        if float(np.max(np.abs(u))) * dt > CFL * h * 2.5:
            raise CFLViolation(f"velocity {np.max(np.abs(u)):.2f} exceeds the CFL bound")
    t = t_final
    # pressure consistent with the momentum balance at t_final: one Euler
    # predictor from the final state, projected, gives phi = dt p
    du, dv = flow.tendency(u, v, t)
    uw, vw = u + dt * du, v + dt * dv
    flow.apply_bc(uw, vw, t)
    uw[:, 0] += dt * inlet_acceleration(flow.yc, t)
    flow.divergence_history, history = [], flow.divergence_history
    p = flow.project(uw, vw) / dt
    flow.divergence_history = history

    xs, ys = flow.xf, flow.yf
    un = _nodal_u(u, 0.0, 0.0)
    un[:, 0] = inlet_velocity(ys, t)
    vn = _nodal_v(v, 0.0, v[:, -1])
    vn[0, :] = 0.0
    vn[-1, :] = 0.0
    pn = _nodal_p(p)
    pn[:, -1] = 0.0
    meta = {"re": re, "n": n, "h": h, "dt": dt, "steps": steps, "t": t}
    mk = lambda name, vals: Field(name, xs, vals, y=ys.copy(), time=t, meta=meta)
    return ChannelResult(
        u=mk("u", un), v=mk("v", vn), p=mk("p", pn),
        max_divergence=float(max(flow.divergence_history)),
        steps=steps, dt=dt, gmres_iterations=flow.gmres_iterations,
        divergence_history=flow.divergence_history, faces=(u, v, p),
    )
