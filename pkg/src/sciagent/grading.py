"""Error numbers for agent artifacts, measured against the in-package oracles."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator, RegularGridInterpolator

from .artifacts import Artifact
from .catalog import GradingRecipe
from .metrics import linf_error, rel_l2_error
from .pde.fields import Field


@dataclass
class Grade:
    error: float
    per_quantity: dict[str, float] = field(default_factory=dict)
    note: str = ""

    def as_dict(self) -> dict:
        clean = lambda e: None if e is None or not math.isfinite(e) else e
        return {"error": clean(self.error), "per_quantity": {k: clean(v) for k, v in self.per_quantity.items()},
                "note": self.note}


# --- oracle references ---------------------------------------------------------

_cache: dict[tuple, dict[str, Field]] = {}
_lock = threading.Lock()


def _compute_reference(oracle: str, params: dict) -> dict[str, Field]:
    if oracle == "burgers":
        from .pde.burgers import solve_burgers

        return {"u": solve_burgers(params.get("nx", 1024))}
    if oracle == "sod":
        from .pde.sod import solve_sod_exact

        rho, u, p = solve_sod_exact(np.linspace(0.0, 1.0, params.get("nodes", 1001)), params.get("t", 0.2))
        return {"rho": rho, "u": u, "p": p}
    if oracle == "poisson":
        from .pde.elliptic import solve_poisson

        return {"u": solve_poisson(params.get("n", 256))}
    if oracle == "helmholtz":
        from .pde.elliptic import solve_helmholtz

        return {"u": solve_helmholtz(params.get("n", 256))}
    if oracle == "lid_cavity":
        from .pde.navier_stokes import solve_lid_cavity

        r = solve_lid_cavity(params.get("n", 128))
        return {"u": r.u, "v": r.v, "p": r.p}
    if oracle == "unsteady_ns":
        from .pde.navier_stokes import solve_unsteady_ns

        r = solve_unsteady_ns(params.get("n", 128))
        return {"u": r.u, "v": r.v, "p": r.p}
    raise KeyError(f"no field oracle named {oracle!r}")


def reference_fields(oracle: str, params: dict | None = None) -> dict[str, Field]:
    """Oracle fields, computed once per ``(oracle, params)`` and shared across threads."""
    params = dict(params or {})
    key = (oracle, tuple(sorted(params.items())))
    with _lock:
        if key not in _cache:
            _cache[key] = _compute_reference(oracle, params)
        return _cache[key]


# --- regridding ---------------------------------------------------------------


def _tensor_grid(coords: np.ndarray, values: np.ndarray):
    """Return ``(xs, ys, V)`` when the points form a complete tensor grid, else None."""
    xs, xi = np.unique(coords[:, 0], return_inverse=True)
    ys, yi = np.unique(coords[:, 1], return_inverse=True)
    if xs.size < 2 or ys.size < 2 or xs.size * ys.size != len(values):
        return None
    V = np.full((ys.size, xs.size), np.nan)
    V[yi, xi] = values
    if np.isnan(V).any():
        return None
    return xs, ys, V


def resample(candidate: Artifact, points: np.ndarray) -> np.ndarray:
    """Candidate values at ``points``: linear in 1D, bilinear on full grids, else piecewise linear."""
    if candidate.coords.shape[1] == 1:
        order = np.argsort(candidate.coords[:, 0], kind="stable")
        return np.interp(points[:, 0], candidate.coords[order, 0], candidate.values[order])
    grid = _tensor_grid(candidate.coords, candidate.values)
    if grid is not None:
        xs, ys, V = grid
        interp = RegularGridInterpolator((ys, xs), V, method="linear", bounds_error=False, fill_value=None)
        return interp(points[:, ::-1])
    lin = LinearNDInterpolator(candidate.coords, candidate.values)
    out = lin(points)
    missing = np.isnan(out)
    if missing.any():
        out[missing] = NearestNDInterpolator(candidate.coords, candidate.values)(points[missing])
    return out


def field_error(reference: Field, candidate: Artifact) -> float:
    pts = reference.points()
    ref = reference.active_values()
    keep = np.isfinite(ref)
    want = 2 if reference.is_2d else 1
    if candidate.coords.shape[1] != want:
        raise ValueError(f"{candidate.name}: expected a {want}D field, got {candidate.layout}")
    return rel_l2_error(ref[keep], resample(candidate, pts[keep]))


# --- recipes ------------------------------------------------------------------


def _rationalize(x: float, max_den: int = 12, tol: float = 1e-6) -> Fraction | None:
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol else None


def grade_exponents(candidate: Artifact) -> Grade:
    from .dimensional import KEYHOLE_EXPONENTS, ZeroVector, canonicalize

    if candidate.values.size != len(KEYHOLE_EXPONENTS):
        return Grade(math.inf, note=f"expected {len(KEYHOLE_EXPONENTS)} exponents")
    order = np.argsort(candidate.coords[:, 0], kind="stable")
    fr = [_rationalize(float(v)) for v in candidate.values[order]]
    if any(f is None for f in fr):
        return Grade(math.inf, note="exponents are not small rationals")
    try:
        canon = canonicalize(fr)
    except ZeroVector:
        return Grade(math.inf, note="zero exponent vector")
    err = max(abs(float(a - b)) for a, b in zip(canon, KEYHOLE_EXPONENTS))
    return Grade(err, {"exponents": err}, note="canonical form " + ",".join(str(c) for c in canon))


def grade_hilbert(artifacts: dict[str, Artifact], recipe: GradingRecipe) -> Grade:
    per = {}
    for name in recipe.required:
        art = artifacts[name]
        n = int(name.rsplit("n", 1)[1])
        if art.values.size != n:
            per[name] = math.inf
            continue
        order = np.argsort(art.coords[:, 0], kind="stable")
        per[name] = linf_error(np.ones(n), art.values[order])
    worst = math.nan if any(math.isnan(v) for v in per.values()) else max(per.values())
    return Grade(worst, per, note="max over n of the L-infinity error against the all-ones solution")


def grade_against_oracle(artifacts: dict[str, Artifact], recipe: GradingRecipe) -> Grade:
    """Error for a set of parsed artifacts; the aggregate is the mean over quantities."""
    missing = [q for q in recipe.required if q not in artifacts]
    if missing:
        raise KeyError(f"missing artifacts: {', '.join(missing)}")
    if recipe.kind == "hilbert":
        return grade_hilbert(artifacts, recipe)
    if recipe.kind == "exponents":
        return grade_exponents(artifacts["exponents"])
    refs = reference_fields(recipe.oracle, recipe.params)
    per = {}
    for q in recipe.required:
        try:
            per[q] = field_error(refs[q], artifacts[q])
        except ValueError as exc:
            return Grade(math.inf, per, note=str(exc))
    return Grade(float(np.mean(list(per.values()))), per, note=f"relative L2 against the {recipe.oracle} oracle")
