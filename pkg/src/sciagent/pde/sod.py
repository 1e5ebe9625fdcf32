"""Sod shock tube: exact Riemann solution and a first-order HLLC finite-volume scheme."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import CFLViolation, Field, NoConvergence

GAMMA = 1.4
LEFT = (1.0, 0.0, 1.0)
RIGHT = (0.125, 0.0, 0.1)
X_DIAPHRAGM = 0.5
T_END = 0.2
CFL = 0.4


@dataclass(frozen=True)
class RiemannStarState:
    p_star: float
    u_star: float
    rho_star_left: float
    rho_star_right: float
    left_wave: str
    right_wave: str
    iterations: int


def _pressure_function(p, rho, pk, gamma):
    """Toro's f_K(p) and its derivative for one side of the interface."""
    a = math.sqrt(gamma * pk / rho)
    if p > pk:  # shock
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        sq = math.sqrt(A / (p + B))
        f = (p - pk) * sq
        df = sq * (1.0 - 0.5 * (p - pk) / (B + p))
    else:  # rarefaction
        ex = (gamma - 1.0) / (2.0 * gamma)
        f = 2.0 * a / (gamma - 1.0) * ((p / pk) ** ex - 1.0)
        df = 1.0 / (rho * a) * (p / pk) ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_state(left=LEFT, right=RIGHT, gamma=GAMMA, tol=1e-14, max_iter=100) -> RiemannStarState:
    """Newton iteration on the pressure function, started from the two-rarefaction guess."""
    rl, ul, pl = left
    rr, ur, pr = right
    al, ar = math.sqrt(gamma * pl / rl), math.sqrt(gamma * pr / rr)
    du = ur - ul
    if 2.0 * (al + ar) / (gamma - 1.0) <= du:
        raise NoConvergence("vacuum generated; no positive star pressure")
    ex = (gamma - 1.0) / (2.0 * gamma)
    p = ((al + ar - 0.5 * (gamma - 1.0) * du) / (al / pl**ex + ar / pr**ex)) ** (1.0 / ex)
    p = max(p, 1e-12)
    for it in range(1, max_iter + 1):
        fl, dfl = _pressure_function(p, rl, pl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, gamma)
        p_new = p - (fl + fr + du) / (dfl + dfr)
        if p_new <= 0.0:
            p_new = tol
        change = 2.0 * abs(p_new - p) / (p_new + p)
        p = p_new
        if change < tol:
            break
    else:
        raise NoConvergence(f"pressure iteration did not converge in {max_iter} steps")
    fl, _ = _pressure_function(p, rl, pl, gamma)
    fr, _ = _pressure_function(p, rr, pr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    if p > pl:
        rho_l = rl * (p / pl + g1) / (g1 * p / pl + 1.0)
    else:
        rho_l = rl * (p / pl) ** (1.0 / gamma)
    if p > pr:
        rho_r = rr * (p / pr + g1) / (g1 * p / pr + 1.0)
    else:
        rho_r = rr * (p / pr) ** (1.0 / gamma)
    return RiemannStarState(
        p_star=p,
        u_star=u,
        rho_star_left=rho_l,
        rho_star_right=rho_r,
        left_wave="shock" if p > pl else "rarefaction",
        right_wave="shock" if p > pr else "rarefaction",
        iterations=it,
    )


def _sample(s, star: RiemannStarState, left, right, gamma):
    """State on the ray x/t = s."""
    rl, ul, pl = left
    rr, ur, pr = right
    ps, us = star.p_star, star.u_star
    g = gamma
    if s <= us:
        al = math.sqrt(g * pl / rl)
        if star.left_wave == "shock":
            sl = ul - al * math.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
            return (rl, ul, pl) if s <= sl else (star.rho_star_left, us, ps)
        head = ul - al
        tail = us - al * (ps / pl) ** ((g - 1) / (2 * g))
        if s <= head:
            return rl, ul, pl
        if s >= tail:
            return star.rho_star_left, us, ps
        c = 2 / (g + 1) + (g - 1) / ((g + 1) * al) * (ul - s)
        return (
            rl * c ** (2 / (g - 1)),
            2 / (g + 1) * (al + (g - 1) / 2 * ul + s),
            pl * c ** (2 * g / (g - 1)),
        )
    ar = math.sqrt(g * pr / rr)
    if star.right_wave == "shock":
        sr = ur + ar * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
        return (star.rho_star_right, us, ps) if s <= sr else (rr, ur, pr)
    head = ur + ar
    tail = us + ar * (ps / pr) ** ((g - 1) / (2 * g))
    if s >= head:
        return rr, ur, pr
    if s <= tail:
        return star.rho_star_right, us, ps
    c = 2 / (g + 1) - (g - 1) / ((g + 1) * ar) * (ur - s)
    return (
        rr * c ** (2 / (g - 1)),
        2 / (g + 1) * (-ar + (g - 1) / 2 * ur + s),
        pr * c ** (2 * g / (g - 1)),
    )


def solve_sod_exact(x_nodes, t: float = T_END, x0: float = X_DIAPHRAGM, left=LEFT, right=RIGHT,
                    gamma: float = GAMMA) -> tuple[Field, Field, Field]:
    x = np.asarray(x_nodes, dtype=float)
    star = star_state(left, right, gamma)
    if t <= 0:
        states = [left if xi <= x0 else right for xi in x]
    else:
        states = [_sample((xi - x0) / t, star, left, right, gamma) for xi in x]
    arr = np.array(states, dtype=float)
    meta = {"star": star.__dict__.copy(), "t": t}
    return tuple(Field(name, x, arr[:, k].copy(), time=t, meta=meta) for k, name in enumerate(("rho", "u", "p")))


# --- HLLC ---------------------------------------------------------------


def _primitive(U, gamma):
    rho = U[0]
    u = U[1] / rho
    p = (gamma - 1.0) * (U[2] - 0.5 * rho * u * u)
    return rho, u, p


def _flux(rho, u, p, E):
    return np.array([rho * u, rho * u * u + p, (E + p) * u])


def hllc_flux(UL, UR, gamma=GAMMA):
    """HLLC interface flux with Davis-type wave speed estimates."""
    rl, ul, pl = _primitive(UL, gamma)
    rr, ur, pr = _primitive(UR, gamma)
    El, Er = UL[2], UR[2]
    al, ar = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    SL = np.minimum(ul - al, ur - ar)
    SR = np.maximum(ul + al, ur + ar)
    SM = (pr - pl + rl * ul * (SL - ul) - rr * ur * (SR - ur)) / (rl * (SL - ul) - rr * (SR - ur))
    FL = _flux(rl, ul, pl, El)
    FR = _flux(rr, ur, pr, Er)

    def star(U, r, u, p, E, S):
        coef = r * (S - u) / (S - SM)
        return np.array(
            [coef, coef * SM, coef * (E / r + (SM - u) * (SM + p / (r * (S - u))))]
        )

    UsL = star(UL, rl, ul, pl, El, SL)
    UsR = star(UR, rr, ur, pr, Er, SR)
    F = np.where(SL >= 0, FL, 0.0)
    F = np.where((SL < 0) & (SM >= 0), FL + SL * (UsL - UL), F)
    F = np.where((SM < 0) & (SR > 0), FR + SR * (UsR - UR), F)
    F = np.where(SR <= 0, FR, F)
    return F, float(np.max(np.maximum(np.abs(SL), np.abs(SR))))


def _residual(U, h, gamma):
    Ug = np.concatenate([U[:, :1], U, U[:, -1:]], axis=1)  # transmissive ghosts
    F, smax = hllc_flux(Ug[:, :-1], Ug[:, 1:], gamma)
    return -(F[:, 1:] - F[:, :-1]) / h, smax


def solve_sod_hllc(nx: int, t_end: float = T_END, cfl: float = CFL, gamma: float = GAMMA,
                   max_steps: int = 1_000_000, record_mass: bool = False):
    """First-order HLLC finite volumes with SSP-RK2 on ``nx`` cells of [0, 1].

    Returns ``(rho, u, p)`` cell-centre fields; ``rho.meta['mass']`` holds the
    total mass after each step when ``record_mass`` is set.
    """
    if cfl <= 0 or cfl > 1:
        raise CFLViolation(f"CFL number {cfl} outside (0, 1]")
    h = 1.0 / nx
    xc = (np.arange(nx) + 0.5) * h
    rho = np.where(xc <= X_DIAPHRAGM, LEFT[0], RIGHT[0])
    u = np.where(xc <= X_DIAPHRAGM, LEFT[1], RIGHT[1])
    p = np.where(xc <= X_DIAPHRAGM, LEFT[2], RIGHT[2])
    U = np.array([rho, rho * u, p / (gamma - 1.0) + 0.5 * rho * u * u])
    t = 0.0
    steps = 0
    masses = [float(U[0].sum() * h)]
    while t < t_end - 1e-15:
        r1, smax = _residual(U, h, gamma)
        dt = min(cfl * h / smax, t_end - t)
        U1 = U + dt * r1
        r2, smax2 = _residual(U1, h, gamma)
        if smax2 * dt > h:
            raise CFLViolation(f"stage wave speed {smax2:.3f} violates CFL at t={t:.4f}")
        U = 0.5 * (U + U1 + dt * r2)
        t += dt
        steps += 1
        if record_mass:
            masses.append(float(U[0].sum() * h))
        if steps > max_steps:
            raise CFLViolation("step budget exhausted")
    rho, u, p = _primitive(U, gamma)
    meta = {"steps": steps, "t": t, "mass": masses, "h": h}
    return tuple(Field(name, xc, v.copy(), time=t, meta=meta) for name, v in (("rho", rho), ("u", u), ("p", p)))
