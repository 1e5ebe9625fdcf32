"""Hilbert systems and a family of dense solvers written from scratch.

Every factorization here is plain numpy array arithmetic; no LAPACK solve
routine is called, so the kernels stay independent of agent code paths.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import Completion, classify_completion, linf_error

METHODS = ("naive_lu", "chol_reg", "lu_reg", "qr_reg", "cg", "pcg", "svd_trunc")
SWEEP_SIZES = (5, 10, 15, 20, 25)
THRESHOLD = 1e-2

# Column labels used by the sweep CSV, in the style of the published table.
METHOD_LABELS = {
    "naive_lu": "Naive-LU",
    "chol_reg": "Chol-Reg",
    "lu_reg": "LU-Reg",
    "qr_reg": "QR-Reg",
    "cg": "CG",
    "pcg": "Pre-CG",
    "svd_trunc": "SVD",
}


class SolverError(ArithmeticError):
    pass


class NotPositiveDefinite(SolverError):
    pass


class MaxIterExceeded(SolverError):
    pass


@dataclass(frozen=True)
class HilbertSystem:
    n: int
    H: np.ndarray
    b: np.ndarray
    x_star: np.ndarray


def build_hilbert(n: int, transpose: bool = False) -> HilbertSystem:
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(1, n + 1)
    if transpose:
        H = 1.0 / (i[None, :] + i[:, None] - 1.0)
    else:
        H = 1.0 / (i[:, None] + i[None, :] - 1.0)
    x_star = np.ones(n)
    # b is the exact row sum, accumulated in the same order for every row
    b = H.sum(axis=1)
    return HilbertSystem(n=n, H=H, b=b, x_star=x_star)


@dataclass
class SolveParams:
    lam: float | None = None  # None -> default rule
    tol: float = 1e-14
    max_iter: int | None = None  # None -> 10 n
    svd_cutoff: float = 1e-12

    def regularization(self, H: np.ndarray) -> float:
        if self.lam is not None:
            return self.lam
        return default_lambda(H)


def default_lambda(H: np.ndarray) -> float:
    return 1e-12 * float(np.trace(H)) / H.shape[0]


@dataclass
class SolveOutcome:
    method: str
    n: int
    x: np.ndarray
    linf: float
    iterations: int | None = None
    rank: int | None = None
    lam: float | None = None
    error: str | None = None
    residual_history: list[float] = field(default_factory=list)

    @property
    def status(self) -> Completion:
        return classify_completion(self.linf, THRESHOLD)


# --- factorizations -------------------------------------------------------


def lu_factor(A: np.ndarray, pivot: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """In-place Doolittle LU; returns the packed LU matrix and row permutation."""
    LU = np.array(A, dtype=float, copy=True)
    n = LU.shape[0]
    perm = np.arange(n)
    for k in range(n - 1):
        if pivot:
            p = k + int(np.argmax(np.abs(LU[k:, k])))
            if p != k:
                LU[[k, p]] = LU[[p, k]]
                perm[[k, p]] = perm[[p, k]]
        piv = LU[k, k]
        with np.errstate(divide="ignore", invalid="ignore"):
            LU[k + 1 :, k] /= piv
        LU[k + 1 :, k + 1 :] -= np.outer(LU[k + 1 :, k], LU[k, k + 1 :])
    return LU, perm


def lu_solve(LU: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = LU.shape[0]
    y = np.array(b, dtype=float)[perm]
    for i in range(1, n):
        y[i] -= LU[i, :i] @ y[:i]
    x = y
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n - 1, -1, -1):
            x[i] = (x[i] - LU[i, i + 1 :] @ x[i + 1 :]) / LU[i, i]
    return x


def cholesky(A: np.ndarray) -> np.ndarray:
    """Lower-triangular L with A = L L^T."""
    n = A.shape[0]
    L = np.zeros_like(A, dtype=float)
    for j in range(n):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            raise NotPositiveDefinite(f"pivot {j} is {d:.3e}")
        L[j, j] = math.sqrt(d)
        L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def forward_sub(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.array(b, dtype=float)
    for i in range(L.shape[0]):
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def back_sub(U: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.array(b, dtype=float)
    for i in range(U.shape[0] - 1, -1, -1):
        x[i] = (x[i] - U[i, i + 1 :] @ x[i + 1 :]) / U[i, i]
    return x


def householder_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR; returns (Q, R) with Q orthogonal."""
    R = np.array(A, dtype=float, copy=True)
    m, n = R.shape
    Q = np.eye(m)
    for k in range(min(m - 1, n)):
        x = R[k:, k]
        alpha = -math.copysign(np.linalg.norm(x), x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        R[k:, :] -= 2.0 * np.outer(v, v @ R[k:, :])
        Q[:, k:] -= 2.0 * np.outer(Q[:, k:] @ v, v)
    return Q, R


def jacobi_svd(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """One-sided (Hestenes) Jacobi SVD: A = U diag(s) V^T, s descending."""
    U = np.array(A, dtype=float, copy=True)
    n = U.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = U[:, i] @ U[:, i]
                b = U[:, j] @ U[:, j]
                c = U[:, i] @ U[:, j]
                if abs(c) <= tol * math.sqrt(a * b) or c == 0.0:
                    continue
                rotated = True
                zeta = (b - a) / (2.0 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                ui, uj = U[:, i].copy(), U[:, j]
                U[:, i] = cs * ui - sn * uj
                U[:, j] = sn * ui + cs * uj
                vi, vj = V[:, i].copy(), V[:, j]
                V[:, i] = cs * vi - sn * vj
                V[:, j] = sn * vi + cs * vj
        if not rotated:
            break
    s = np.linalg.norm(U, axis=0)
    order = np.argsort(-s)
    s = s[order]
    V = V[:, order]
    U = U[:, order]
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(s > 0, U / np.where(s > 0, s, 1.0), 0.0)
    return U, s, V


def condition_2norm(H: np.ndarray) -> float:
    _, s, _ = jacobi_svd(H)
    if s[-1] == 0.0:
        return math.inf
    return float(s[0] / s[-1])


# --- iterative ------------------------------------------------------------


def conjugate_gradient(A, b, tol, max_iter, precondition=False):
    """(Preconditioned) CG from x0 = 0 with a Jacobi preconditioner.

    Returns ``(x, iterations, history, converged)``; ``history`` holds the
    relative residual norm after each iteration.
    """
    n = b.size
    minv = 1.0 / np.diag(A) if precondition else np.ones(n)
    x = np.zeros(n)
    r = b.copy()
    z = minv * r
    p = z.copy()
    rz = r @ z
    bnorm = np.linalg.norm(b)
    history: list[float] = []
    for k in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            return x, k - 1, history, False
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rel = np.linalg.norm(r) / bnorm
        history.append(float(rel))
        if rel <= tol:
            return x, k, history, True
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, history, False


# --- dispatch -------------------------------------------------------------


def solve(system: HilbertSystem, method: str, params: SolveParams | None = None) -> SolveOutcome:
    params = params or SolveParams()
    H, b, n = system.H, system.b, system.n
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if params.tol <= 0:
        raise ValueError("tol must be positive")
    out = SolveOutcome(method=method, n=n, x=np.full(n, np.nan), linf=math.nan)
    lam = params.regularization(H) if method in ("chol_reg", "lu_reg", "qr_reg") else None
    out.lam = lam
    A = H + lam * np.eye(n) if lam is not None else H
    try:
        with np.errstate(all="ignore"):
            if method == "naive_lu":
                LU, perm = lu_factor(H, pivot=False)
                x = lu_solve(LU, perm, b)
            elif method == "lu_reg":
                LU, perm = lu_factor(A, pivot=True)
                x = lu_solve(LU, perm, b)
            elif method == "chol_reg":
                L = cholesky(A)
                x = back_sub(L.T, forward_sub(L, b))
            elif method == "qr_reg":
                Q, R = householder_qr(A)
                x = back_sub(R, Q.T @ b)
            elif method in ("cg", "pcg"):
                max_iter = params.max_iter or 10 * n
                x, its, hist, ok = conjugate_gradient(
                    H, b, params.tol, max_iter, precondition=(method == "pcg")
                )
                out.iterations = its
                out.residual_history = hist
                if not ok:
                    out.error = f"MaxIterExceeded after {its} iterations"
            else:  # svd_trunc
                U, s, V = jacobi_svd(H)
                keep = s > params.svd_cutoff * s[0]
                out.rank = int(keep.sum())
                x = V[:, keep] @ ((U[:, keep].T @ b) / s[keep])
    except NotPositiveDefinite as exc:
        out.error = f"NotPositiveDefinite: {exc}"
        return out
    out.x = x
    out.linf = linf_error(system.x_star, x)
    return out


@dataclass
class SweepCell:
    method: str
    n: int
    outcome: SolveOutcome
    status: Completion


def sweep(
    n_list=SWEEP_SIZES,
    methods=METHODS,
    params: SolveParams | dict[str, SolveParams] | None = None,
) -> list[SweepCell]:
    cells = []
    for method in methods:
        p = params.get(method) if isinstance(params, dict) else params
        for n in n_list:
            outcome = solve(build_hilbert(n), method, p)
            cells.append(SweepCell(method, n, outcome, classify_completion(outcome.linf, THRESHOLD)))
    return cells


def sweep_csv(cells: list[SweepCell]) -> str:
    """Method rows by matrix-size columns of L-infinity errors."""
    sizes = sorted({c.n for c in cells})
    methods = list(dict.fromkeys(c.method for c in cells))
    table = {(c.method, c.n): c.outcome.linf for c in cells}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", *sizes])
    for m in methods:
        w.writerow([METHOD_LABELS.get(m, m), *(f"{table[(m, n)]:.2e}" for n in sizes)])
    return buf.getvalue()
