from fractions import Fraction

import numpy as np
import pytest

from sciagent.hilbert import (METHODS, SolveParams, build_hilbert, cholesky, condition_2norm,
                              conjugate_gradient, householder_qr, jacobi_svd, lu_factor, lu_solve,
                              solve, sweep, sweep_csv)
from sciagent.metrics import Completion, linf_error


def exact_row_sums(n):
    return [sum(Fraction(1, i + j - 1) for j in range(1, n + 1)) for i in range(1, n + 1)]


def test_build_small_cases():
    s = build_hilbert(2)
    assert np.array_equal(s.H, [[1, 0.5], [0.5, 1 / 3]])
    assert np.allclose(s.b, [1.5, 5 / 6], rtol=0, atol=1e-15)
    assert build_hilbert(5).b[0] == pytest.approx(137 / 60, abs=1e-15)
    assert np.allclose(build_hilbert(3).b, [11 / 6, 13 / 12, 47 / 60], rtol=0, atol=1e-15)
    for n in (7, 25):
        exact = np.array([float(f) for f in exact_row_sums(n)])
        assert np.max(np.abs(build_hilbert(n).b - exact) / exact) < 1e-14


def test_condition_number():
    assert condition_2norm(np.eye(4)) == pytest.approx(1.0)
    H = build_hilbert(8).H
    assert condition_2norm(H) == pytest.approx(np.linalg.cond(H), rel=1e-6)


def test_factorizations_match_numpy_on_well_conditioned_input():
    rng = np.random.default_rng(11)
    B = rng.normal(size=(12, 12))
    A = B @ B.T + 12 * np.eye(12)
    b = rng.normal(size=12)
    ref = np.linalg.solve(A, b)
    LU, perm = lu_factor(A)
    assert np.allclose(lu_solve(LU, perm, b), ref, atol=1e-12)
    L = cholesky(A)
    assert np.allclose(L @ L.T, A, atol=1e-12) and np.allclose(L, np.linalg.cholesky(A), atol=1e-12)
    Q, R = householder_qr(A)
    assert np.allclose(Q @ R, A, atol=1e-12) and np.allclose(Q.T @ Q, np.eye(12), atol=1e-12)
    U, s, V = jacobi_svd(A)
    assert np.allclose(s, np.linalg.svd(A, compute_uv=False), rtol=1e-12)
    assert np.allclose(U @ np.diag(s) @ V.T, A, atol=1e-11)


def test_svd_of_hilbert_matches_numpy_singular_values():
    H = build_hilbert(10).H
    _, s, _ = jacobi_svd(H)
    ref = np.linalg.svd(H, compute_uv=False)
    assert np.allclose(s[:6], ref[:6], rtol=1e-10)


def test_small_pcg_and_large_regularized_vs_naive():
    assert solve(build_hilbert(5), "pcg", SolveParams(tol=1e-14)).linf <= 1e-9
    assert solve(build_hilbert(25), "chol_reg").linf <= 1e-2
    assert solve(build_hilbert(25), "naive_lu").linf > 1e-2


def test_naive_lu_at_n5_matches_conditioning_estimate():
    H = build_hilbert(5).H
    out = solve(build_hilbert(5), "naive_lu")
    assert out.status is Completion.BELOW_THRESHOLD
    assert out.linf < 10 * condition_2norm(H) * np.finfo(float).eps


def test_sweep_statuses():
    cells = {(c.method, c.n): c for c in sweep()}
    for n in (5, 10, 15, 20, 25):
        assert cells[("chol_reg", n)].status is Completion.BELOW_THRESHOLD
        assert cells[("pcg", n)].status is Completion.BELOW_THRESHOLD
    for n in (15, 20, 25):
        assert cells[("naive_lu", n)].status is Completion.OVER_THRESHOLD
    csv_text = sweep_csv(list(cells.values()))
    assert csv_text.splitlines()[0] == "method,5,10,15,20,25"
    assert {ln.split(",")[0] for ln in csv_text.splitlines()[1:]} >= {"Chol-Reg", "Pre-CG", "SVD"}


def test_negative_lambda_gives_nan_cell():
    cells = sweep(n_list=(10,), methods=("chol_reg",), params=SolveParams(lam=-1.0))
    assert cells[0].status is Completion.CONTAINS_NAN
    assert "NotPositiveDefinite" in cells[0].outcome.error


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("n", [5, 10])
def test_stored_linf_and_residual_consistent(method, n):
    s = build_hilbert(n)
    out = solve(s, method)
    assert abs(out.linf - linf_error(s.x_star, out.x)) <= 1e-15
    # each method leaves a residual far below the size of b
    assert np.max(np.abs(s.H @ out.x - s.b)) <= 1e-6 * np.max(np.abs(s.b))


def test_regularization_continuity_at_n5():
    s = build_hilbert(5)
    naive = solve(s, "chol_reg", SolveParams(lam=0.0)).linf
    errs = [solve(s, "chol_reg", SolveParams(lam=lam)).linf for lam in (1e-6, 1e-10, 1e-14)]
    assert all(np.isfinite(errs))
    assert abs(errs[-1] - naive) < abs(errs[0] - naive)
    assert abs(errs[-1] - naive) < 1e-9


@pytest.mark.parametrize("pre", [False, True])
def test_cg_error_decreases_in_energy_norm(pre):
    # CG minimises the A-norm of the error over growing Krylov spaces
    s = build_hilbert(8)
    energies = []
    for k in range(1, 9):
        x, _, _, _ = conjugate_gradient(s.H, s.b, 0.0, k, precondition=pre)
        e = x - s.x_star
        energies.append(float(e @ s.H @ e))
    assert all(b <= a * (1 + 1e-9) + 1e-28 for a, b in zip(energies, energies[1:]))


def test_symmetric_construction_gives_same_answer():
    for method in ("chol_reg", "pcg", "lu_reg"):
        a = solve(build_hilbert(12), method).x
        b = solve(build_hilbert(12, transpose=True), method).x
        assert np.array_equal(a, b)


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(build_hilbert(3), "gauss_seidel")
