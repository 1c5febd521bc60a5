import numpy as np
import pytest

from slipflow import (
    ConfigError,
    FluidParams,
    regularize_initial_data,
)


def make_params(alpha=1e-3):
    return FluidParams(nu=0.1, lam=0.0, a=1.0, gamma=5.0 / 3.0, beta=4.5,
                       alpha=alpha, eps=1e-2, delta=5e-2, g=(0.1, 0.1))


def test_resolved_data_inside_the_bounds_is_untouched(space, basis):
    geom = space.geom
    rho0 = 1.0 + 0.1 * np.cos(np.pi * geom.Y)
    q = np.stack([0.2 * rho0, np.zeros_like(rho0)])
    reg = regularize_initial_data(rho0, q, space, basis, make_params())
    assert reg.clamp_fraction == 0.0
    np.testing.assert_allclose(reg.rho0_grid, rho0, rtol=0, atol=1e-13)
    assert reg.l_gamma_distance < 1e-12
    assert reg.l1_momentum_distance < 1e-12
    assert reg.l1_kinetic_distance < 1e-12


def test_zero_momentum_gives_zero_velocity(space, basis):
    rho0 = np.ones(space.geom.n_points)
    q = np.zeros((2, space.geom.n_points))
    reg = regularize_initial_data(rho0, q, space, basis, make_params())
    assert np.all(reg.u0 == 0.0)
    assert np.all(reg.q_grid == 0.0)


def test_clamp_activates_above_the_ceiling(space, basis):
    geom = space.geom
    params = make_params(alpha=1e-2)
    hi = params.alpha ** (-1.0 / (2.0 * params.beta))
    rho0 = 1.0 + 1.2 * np.cos(np.pi * geom.Y) ** 2  # peak 2.2 > hi = 1.668
    q = np.zeros((2, geom.n_points))
    reg = regularize_initial_data(rho0, q, space, basis, params)
    assert reg.clamp_fraction > 0.0
    assert reg.clamp_bounds == (params.alpha, hi)
    assert reg.l_gamma_distance > 1e-3
    # the projected field is what the run starts from
    np.testing.assert_allclose(space.synth(reg.rho0_coeffs), reg.rho0_grid,
                               rtol=0, atol=1e-12)


def test_looser_alpha_shrinks_the_regularization_distance(space, basis):
    """Halving the clamp pressure widens the admissible band monotonically."""
    geom = space.geom
    rho0 = 1.0 + 1.2 * np.cos(np.pi * geom.Y) ** 2
    q = np.zeros((2, geom.n_points))
    dists = []
    for alpha in (1e-2, 1e-3, 1e-4):
        reg = regularize_initial_data(rho0, q, space, basis,
                                      make_params(alpha=alpha))
        dists.append(reg.l_gamma_distance)
    assert dists[0] > dists[1] > dists[2]


def test_momentum_is_rebuilt_from_the_projected_velocity(space, basis):
    geom = space.geom
    rho0 = 1.0 + 0.1 * np.cos(np.pi * geom.Y)
    ux = 0.3 + 0.1 * np.sin(2 * np.pi * geom.X / geom.Lx)
    q = np.stack([rho0 * ux, np.zeros_like(rho0)])
    reg = regularize_initial_data(rho0, q, space, basis, make_params())
    ux_proj = reg.u0 @ basis.vx
    np.testing.assert_allclose(reg.q_grid[0], reg.rho0_grid * ux_proj,
                               rtol=0, atol=1e-12)


def test_negative_density_is_rejected(space, basis):
    rho0 = np.ones(space.geom.n_points)
    rho0[7] = -0.5
    q = np.zeros((2, space.geom.n_points))
    with pytest.raises(ConfigError, match="nonnegative"):
        regularize_initial_data(rho0, q, space, basis, make_params())


def test_momentum_on_vacuum_is_rejected(space, basis):
    geom = space.geom
    rho0 = np.maximum(np.cos(np.pi * geom.Y), 0.0)  # vanishes on y >= 1/2
    q = np.stack([np.ones_like(rho0), np.zeros_like(rho0)])
    with pytest.raises(ConfigError, match="momentum must vanish"):
        regularize_initial_data(rho0, q, space, basis, make_params())


def test_wrong_grid_shape_is_rejected(space, basis):
    with pytest.raises(ConfigError, match="quadrature grid"):
        regularize_initial_data(np.ones(10), np.zeros((2, 10)),
                                space, basis, make_params())
