import pytest
import sympy as sp

from slipflow import FluidParams, Geometry
from slipflow.errors import ConfigError
from slipflow.mms import (
    ManufacturedPair,
    constant_pair,
    manufactured_solution_residual,
    mms_dt_study,
    mms_resolution_study,
    polynomial_pair,
    smooth_pair,
)

X, Y, T = sp.symbols("x y t", real=True)


def make_params(**over):
    kw = dict(nu=0.1, lam=0.05, a=1.0, gamma=5.0 / 3.0, beta=4.5, alpha=1e-3,
              eps=1e-2, delta=5e-2, g=(0.0, 0.0), f=None)
    kw.update(over)
    return FluidParams(**kw)


def test_constant_pair_is_reproduced_exactly():
    geom = Geometry(1.0, 1.0, 24, 24)
    rep = manufactured_solution_residual(constant_pair(), geom, 1, 1,
                                         make_params(), t_end=0.02, dt=2e-3)
    assert rep.context["rho_error"] <= 1e-12
    assert rep.context["u_error"] <= 1e-12


def test_diffusion_eigenmode_pair_reduces_to_density_accuracy():
    # u* = 0 with a decaying Neumann eigenmode density: the continuity source
    # vanishes identically and the forcing only balances the pressure
    eps = 1e-2
    kappa = sp.pi**2 / 100
    rho = 1 + sp.Rational(1, 10) * sp.exp(-kappa * T) * sp.cos(sp.pi * Y)
    pair = ManufacturedPair("eigenmode", rho, sp.Integer(0), sp.Integer(0), 1.0, 1.0)
    _, _, src = pair.forcing(make_params(eps=eps))
    assert sp.simplify(src) == 0
    geom = Geometry(1.0, 1.0, 24, 24)
    rep = manufactured_solution_residual(pair, geom, 1, 1, make_params(eps=eps),
                                         t_end=0.05, dt=2.5e-3)
    assert rep.context["rho_error"] <= 1e-8
    assert rep.context["u_error"] <= 1e-8


def test_pair_validation_names_the_broken_condition():
    ok = polynomial_pair()
    ok.validate(0.1)

    bad_normal = ManufacturedPair(
        "leaky", sp.Integer(1), sp.Integer(0), sp.cos(sp.pi * Y), 1.0, 1.0)
    with pytest.raises(ConfigError, match="u.n = 0"):
        bad_normal.validate(0.1)

    bad_shear = ManufacturedPair(
        "sheared", sp.Integer(1), sp.sin(sp.pi * Y), sp.Integer(0), 1.0, 1.0)
    with pytest.raises(ConfigError, match="wall shear"):
        bad_shear.validate(0.1)

    bad_periodic = ManufacturedPair(
        "drifting", sp.Integer(1), X * (sp.cos(sp.pi * Y) + 2), sp.Integer(0),
        1.0, 1.0)
    with pytest.raises(ConfigError, match="periodic"):
        bad_periodic.validate(0.1)

    bad_rho = ManufacturedPair(
        "vacuum", sp.cos(2 * sp.pi * X) * sp.cos(sp.pi * Y), sp.Integer(0),
        sp.Integer(0), 1.0, 1.0)
    with pytest.raises(ConfigError, match="positivity"):
        bad_rho.validate(0.1)


def test_mms_requires_frictionless_walls():
    geom = Geometry(1.0, 1.0, 24, 24)
    with pytest.raises(ConfigError, match="frictionless"):
        manufactured_solution_residual(polynomial_pair(), geom, 1, 1,
                                       make_params(g=(0.1, 0.0)),
                                       t_end=0.01, dt=1e-3)


def test_dt_study_measures_second_order():
    geom = Geometry(1.0, 1.0, 24, 24)
    study = mms_dt_study(polynomial_pair(), geom, 1, 1, make_params(),
                         t_end=0.04, dts=(4e-3, 2e-3))
    assert study["order"] >= 1.8
    assert study["errors"][1] < study["errors"][0]


def test_resolution_study_measures_spectral_decay():
    study = mms_resolution_study(smooth_pair(), make_params(), t_end=0.02,
                                 dt=1e-3, levels=((1, 1), (2, 2)), quad=24)
    assert study["slopes_per_doubling"][0] <= -3.0


def test_study_input_gates():
    geom = Geometry(1.0, 1.0, 24, 24)
    with pytest.raises(ConfigError, match="two step sizes"):
        mms_dt_study(polynomial_pair(), geom, 1, 1, make_params(), 0.01, (1e-3,))
    with pytest.raises(ConfigError, match="strictly increase"):
        mms_resolution_study(smooth_pair(), make_params(), 0.01, 1e-3,
                             levels=((2, 2), (2, 2)))
