import numpy as np
import pytest

from sciagent.metrics import rel_l2_error
from sciagent.pde import navier_stokes as ns
from sciagent.pde.fields import CFLViolation


def test_lid_profile_values():
    assert ns.lid_velocity(1.0) == 0.0
    assert ns.lid_velocity(0.5) == 0.5
    assert ns.lid_velocity(2.0) == -4.0


def test_inlet_sum_is_one_at_half_time():
    y = np.linspace(0, 1, 17)
    assert np.max(np.abs(ns.inlet_velocity(y, 0.5) - np.sin(np.pi * y))) <= 1e-12


def test_inlet_acceleration_is_time_derivative():
    y, t, d = np.linspace(0, 1, 9), 0.37, 1e-6
    fd = (ns.inlet_velocity(y, t + d) - ns.inlet_velocity(y, t - d)) / (2 * d)
    assert np.allclose(ns.inlet_acceleration(y, t), fd, atol=1e-6)


def test_cavity_jacobian_matches_finite_differences():
    ops = ns._cavity_ops(6, ns.CAVITY_SIZE, ns.LID_ALPHA)
    rng = np.random.default_rng(0)
    m = ops.Gx_u.shape[0] + ops.Gx_v.shape[0] + ops.Dpx.shape[1]
    z = rng.normal(scale=0.1, size=m)
    J = ns._cavity_jacobian(z, ops, ns.RE).toarray()
    eps = 1e-7
    R0 = ns._cavity_residual(z, ops, ns.RE)
    fd = np.empty_like(J)
    for k in range(m):
        dz = np.zeros(m)
        dz[k] = eps
        fd[:, k] = (ns._cavity_residual(z + dz, ops, ns.RE) - R0) / eps
    assert np.max(np.abs(J - fd)) <= 1e-5 * max(1.0, np.max(np.abs(J)))


@pytest.fixture(scope="module")
def cavity():
    return {n: ns.solve_lid_cavity(n) for n in (16, 32, 64)}


def test_cavity_converged_state(cavity):
    r = cavity[64]
    assert r.residual_history[-1] <= ns.STEADY_TOL
    assert r.max_divergence <= 1e-8
    assert r.p.values[0, 0] == 0.0
    assert np.array_equal(r.u.values[-1], ns.lid_velocity(r.u.x))
    assert np.all(r.u.values[0] == 0) and np.all(r.v.values[:, 0] == 0) and np.all(r.v.values[:, -1] == 0)


def test_cavity_self_convergence(cavity):
    def gap(c, f):
        return rel_l2_error(f.u.values[::2, ::2], c.u.values)

    assert gap(cavity[16], cavity[32]) > gap(cavity[32], cavity[64])


def test_cavity_not_converged_raises():
    with pytest.raises(ns.NotConverged):
        ns.solve_lid_cavity(16, max_iter=1)


@pytest.fixture(scope="module")
def channel():
    return {n: ns.solve_unsteady_ns(n) for n in (16, 32, 64)}


def test_channel_projection_and_boundaries(channel):
    r = channel[64]
    assert r.max_divergence <= 1e-6
    assert max(r.divergence_history) <= 1e-6
    u_faces = r.faces[0]
    yc = (np.arange(u_faces.shape[0]) + 0.5) / 64
    assert np.max(np.abs(u_faces[:, 0] - np.sin(np.pi * yc))) <= 1e-12
    assert np.max(np.abs(r.u.values[:, 0] - np.sin(np.pi * r.u.y))) <= 1e-12
    assert np.all(r.p.values[:, -1] == 0.0)
    assert r.u.time == 0.5


def test_channel_self_convergence(channel):
    def gap(c, f, q):
        return rel_l2_error(getattr(f, q).values[::2, ::2], getattr(c, q).values)

    for q in ("u", "v", "p"):
        assert gap(channel[16], channel[32], q) > gap(channel[32], channel[64], q)


def test_channel_gmres_is_used(channel):
    its = channel[32].gmres_iterations
    assert len(its) == 2 * channel[32].steps + 1 and max(its) < ns.GMRES_MAXITER


@pytest.mark.slow
def test_channel_jacobi_preconditioner_agrees():
    a = ns.solve_unsteady_ns(16, preconditioner="ilu")
    b = ns.solve_unsteady_ns(16, preconditioner="jacobi")
    assert rel_l2_error(a.u.values, b.u.values) < 1e-6


def test_channel_cfl_guard():
    with pytest.raises(CFLViolation):
        ns.solve_unsteady_ns(16, dt=0.1)
