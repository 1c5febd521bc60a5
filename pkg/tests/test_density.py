import numpy as np
import pytest

from slipflow import (
    Geometry,
    ScalarSpace,
    ScalarSpectralField,
    VelocityCoeffs,
    build_velocity_basis,
    check_density_bounds,
    density_step,
    solve_density_trajectory,
)
from slipflow.errors import PositivityError, StepSizeError


def mode_index(basis, component, y_family, k, m, x_parity):
    return next(
        i
        for i, s in enumerate(basis.modes)
        if (s.component, s.y_family, s.k, s.m, s.x_parity)
        == (component, y_family, k, m, x_parity)
    )


def test_zero_velocity_reproduces_heat_semigroup(space, basis):
    rng = np.random.default_rng(4)
    rho0 = 0.05 * rng.standard_normal((space.P, space.M))
    rho0[0, 0] = 1.0
    K, dt, eps = 50, 2e-3, 0.01
    w = np.zeros((K + 1, basis.n))
    traj = solve_density_trajectory(space, basis, w, rho0, eps, dt)
    for k in (1, 10, 50):
        exact = rho0 * np.exp(eps * k * dt * space.lap)
        assert np.allclose(traj[k], exact, atol=1e-12)


def test_pure_diffusion_closed_form(geom, space, basis):
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    rho0[0, 1] = 0.1
    K, dt, eps = 100, 1e-3, 0.01
    w = np.zeros((K + 1, basis.n))
    traj = solve_density_trajectory(space, basis, w, rho0, eps, dt)
    t = K * dt
    expected = 1.0 + 0.1 * np.exp(-eps * (np.pi / geom.H) ** 2 * t) * np.cos(
        np.pi * geom.Y / geom.H
    )
    assert np.allclose(space.synth(traj[-1]), expected, atol=1e-8)


def test_mass_conserved_bitwise(space, basis):
    rng = np.random.default_rng(8)
    rho0 = 0.1 * rng.standard_normal((space.P, space.M))
    rho0[0, 0] = 1.3
    K = 100
    w = 0.3 * rng.standard_normal((K + 1, basis.n)) / np.sqrt(basis.n)
    traj = solve_density_trajectory(space, basis, w, rho0, eps=5e-3, dt=1e-3)
    assert np.all(traj[:, 0, 0] == 1.3)


def test_transport_matches_refined_reference(geom, space, basis):
    # Advect a smooth bump with a fixed velocity field; a run with twice the
    # modes and dt/16 serves as the reference solution of the same PDE.
    eps = 0.01
    c = np.zeros(basis.n)
    c[mode_index(basis, "x", "cos", 0, 0, "cos")] = 0.2
    c[mode_index(basis, "y", "sin", 1, 1, "cos")] = 0.15
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    rho0[1, 1] = 0.2  # cos(2 pi x) cos(pi y)

    K, dt = 50, 2e-3
    w = np.tile(c, (K + 1, 1))
    coarse = solve_density_trajectory(space, basis, w, rho0, eps, dt)

    fine_geom = Geometry(geom.Lx, geom.H, 48, 48)
    fine_space = ScalarSpace(fine_geom, 2 * space.kx, 2 * space.ky)
    fine_basis = build_velocity_basis(fine_geom, basis.kx_max, basis.ky_max)
    refine = 16
    rho0_f = np.zeros((fine_space.P, fine_space.M))
    rho0_f[0, 0] = 1.0
    rho0_f[1, 1] = 0.2
    w_f = np.tile(c, (K * refine + 1, 1))
    fine = solve_density_trajectory(fine_space, fine_basis, w_f, rho0_f, eps, dt / refine)

    # Evaluate both solutions on the fine grid (same closed-form modes).
    eval_space = ScalarSpace(fine_geom, space.kx, space.ky)
    a = eval_space.synth(coarse[-1])
    b = fine_space.synth(fine[-1])
    rel = np.sqrt(fine_geom.integrate((a - b) ** 2) / fine_geom.integrate(b**2))
    assert rel < 1e-6


def test_x_uniform_data_stays_x_uniform(space, basis):
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    rho0[0, 1] = 0.3
    c = np.zeros(basis.n)
    c[mode_index(basis, "x", "cos", 0, 1, "cos")] = 0.2
    c[mode_index(basis, "y", "sin", 0, 1, "cos")] = 0.2
    K = 40
    w = np.tile(c, (K + 1, 1))
    traj = solve_density_trajectory(space, basis, w, rho0, eps=0.01, dt=1e-3)
    assert np.max(np.abs(traj[:, 1:, :])) < 1e-13


def test_diffusion_max_principle_single_mode(space, basis):
    # A single Laplacian eigenmode decays monotonically at every grid point,
    # so the collocation extrema move one way only.
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    rho0[1, 1] = -0.3
    K = 60
    w = np.zeros((K + 1, basis.n))
    traj = solve_density_trajectory(space, basis, w, rho0, eps=0.05, dt=2e-3)
    mins = np.array([np.min(space.synth(traj[k])) for k in range(K + 1)])
    maxs = np.array([np.max(space.synth(traj[k])) for k in range(K + 1)])
    assert np.all(np.diff(mins) >= -1e-12)
    assert np.all(np.diff(maxs) <= 1e-12)


def test_positivity_failure_reports_location(space, basis):
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    rho0[0, 1] = 0.5  # minimum 0.5 near y = H
    K = 40
    w = np.zeros((K + 1, basis.n))
    sink = lambda t: -5.0 * np.ones(space.geom.n_points)
    with pytest.raises(PositivityError, match=r"lost positivity at t = .*x = .*y = "):
        solve_density_trajectory(space, basis, w, rho0, eps=0.01, dt=5e-3, source_fn=sink)


def test_cfl_violation_raises(space, basis):
    rho0 = np.zeros((space.P, space.M))
    rho0[0, 0] = 1.0
    c = np.zeros(basis.n)
    c[0] = 50.0
    w = np.tile(c, (3, 1))
    with pytest.raises(StepSizeError, match="CFL"):
        solve_density_trajectory(space, basis, w, rho0, eps=0.01, dt=1e-2)


def test_single_step_wrapper_consistency(space, basis):
    rng = np.random.default_rng(12)
    rho0 = 0.05 * rng.standard_normal((space.P, space.M))
    rho0[0, 0] = 1.0
    c0 = 0.05 * rng.standard_normal(basis.n)
    c1 = 0.05 * rng.standard_normal(basis.n)
    field = ScalarSpectralField(space, rho0)
    out = density_step(field, VelocityCoeffs(basis, c0), VelocityCoeffs(basis, c1),
                       eps=0.01, dt=1e-3)
    traj = solve_density_trajectory(space, basis, np.stack([c0, c1]), rho0,
                                    eps=0.01, dt=1e-3)
    assert np.allclose(out.coeffs, traj[1], atol=1e-14)


def test_density_envelope_holds(space, basis):
    rng = np.random.default_rng(3)
    rho0 = 0.05 * rng.standard_normal((space.P, space.M))
    rho0[0, 0] = 1.0
    K, dt = 50, 1e-3
    c = np.zeros(basis.n)
    c[mode_index(basis, "x", "cos", 1, 1, "cos")] = 0.2
    c[mode_index(basis, "y", "sin", 1, 2, "sin")] = 0.1
    w = np.tile(c, (K + 1, 1))
    traj = solve_density_trajectory(space, basis, w, rho0, eps=0.01, dt=dt)
    report = check_density_bounds(space, basis, traj, w, dt)
    assert not report.violated
    assert report.first_violation is None
    assert np.all(report.observed_min >= report.lower_envelope - report.tolerance)
    assert np.all(report.observed_max <= report.upper_envelope + report.tolerance)
    d = report.as_dict()
    assert d["violated"] is False


def test_density_envelope_flags_injected_fault(space, basis):
    rng = np.random.default_rng(3)
    rho0 = 0.05 * rng.standard_normal((space.P, space.M))
    rho0[0, 0] = 1.0
    K, dt = 20, 1e-3
    w = np.zeros((K + 1, basis.n))
    traj = solve_density_trajectory(space, basis, w, rho0, eps=0.01, dt=dt)
    cache = np.stack([space.synth(traj[k]) for k in range(K + 1)])
    cache[7, 3] = -0.1  # corrupted snapshot bypassing the coefficient path
    report = check_density_bounds(space, basis, traj, w, dt, grid_cache=cache)
    assert report.violated
    assert report.first_violation["node"] == 7
    assert report.first_violation["side"] == "lower"
    assert report.first_violation["value"] == pytest.approx(-0.1)
    assert {"t", "x", "y", "bound"} <= set(report.first_violation)
