import time

import pytest

from slipflow import (
    Geometry,
    ScalarSpace,
    build_velocity_basis,
    parse_config,
    run_simulation,
)

# The acceptance smoke case: a forced channel flow that spins up from rest,
# reaches an active-slip wall state, and exercises every diagnostic at its
# production tolerance.  Solved once per session; most acceptance criteria
# read from this run.
SMOKE_INI = """\
[geometry]
Lx = 1.0
H = 1.0

[discretization]
kx_max = 2
ky_max = 2
quad_x = 32
quad_y = 32
dt = 2.5e-4
t_end = 0.5

[params]
nu = 0.1
lambda = 0.0
a = 1.0
gamma = 1.6666666666666667
beta = 4.5
alpha = 1e-3
eps = 1e-2
delta = 5e-2
g0 = 0.1
g1 = 0.1
fx = 0.4 + 0.2*sin(2*pi*x)*cos(pi*y)
fy = 0.1*cos(2*pi*x)*sin(pi*y)

[solver]
tol_fp = 1e-11
max_iter = 50
damping = 0.7
coupling = trajectory

[initial_data]
rho0 = 1.0
qx = 0.0
qy = 0.0

[output]
stride = 500

[verification]
seed = 0
battery = 100
interior = 50
"""

# A run with no force and uniform resting initial data: the exact solution
# is the rest state, the Picard solve converges in one iteration, and every
# verification check passes.  Cheap enough to anchor the I/O and CLI tests.
ZERO_DATA_INI = """\
[geometry]
Lx = 1.0
H = 1.0

[discretization]
kx_max = 2
ky_max = 2
quad_x = 24
quad_y = 24
dt = 1e-4
t_end = 0.05

[params]
nu = 0.1
lambda = 0.0
a = 1.0
gamma = 1.6666666666666667
beta = 4.5
alpha = 1e-3
eps = 1e-2
delta = 5e-2
g0 = 0.1
g1 = 0.1

[solver]
tol_fp = 1e-11

[initial_data]
rho0 = 1.0
qx = 0.0
qy = 0.0

[verification]
battery = 5
interior = 3
"""

# Same grid with a weak body force: several Picard iterations with a clean
# contraction history, still passing all checks in a few seconds.
SMALL_FORCE_INI = ZERO_DATA_INI.replace(
    "g1 = 0.1",
    "g1 = 0.1\nfx = 0.001*sin(2*pi*x)*cos(pi*y)\n"
    "fy = 0.0005*cos(2*pi*x)*sin(pi*y)",
).replace("tol_fp = 1e-11", "tol_fp = 1e-12")


@pytest.fixture(scope="session")
def smoke_text():
    return SMOKE_INI


@pytest.fixture(scope="session")
def smoke_result(tmp_path_factory):
    """The smoke run, solved and verified once for the whole session."""
    out = tmp_path_factory.mktemp("smoke") / "archive"
    t0 = time.perf_counter()
    result = run_simulation(parse_config(SMOKE_INI), out_dir=out)
    result.elapsed = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def smoke_halving(smoke_result):
    """Energy residuals of the smoke case at dt = 1e-3 and 5e-4.

    At the production step size the energy residual sits on the spatial
    projection floor (~1.5e-9), far below the tolerance but useless for an
    order check; this pair is coarse enough that the O(dt^2) integrator
    error dominates.  The verification battery is shrunk: only the ledger
    is read here.
    """
    residuals = {}
    t0 = time.perf_counter()
    for dt in ("1e-3", "5e-4"):
        cfg = parse_config(SMOKE_INI.replace("dt = 2.5e-4", f"dt = {dt}"))
        res = run_simulation(cfg.replace(battery=2, interior=2))
        residuals[float(dt)] = res.suite.ledger.max_relative_residual
    residuals["elapsed"] = time.perf_counter() - t0 + smoke_result.elapsed
    return residuals


@pytest.fixture(scope="session")
def zerodata_text():
    return ZERO_DATA_INI


@pytest.fixture(scope="session")
def small_force_text():
    return SMALL_FORCE_INI


@pytest.fixture(scope="session")
def geom():
    return Geometry(1.0, 1.0, 32, 32)


@pytest.fixture(scope="session")
def space(geom):
    return ScalarSpace(geom, 4, 4)


@pytest.fixture(scope="session")
def basis(geom):
    return build_velocity_basis(geom, 2, 2)


@pytest.fixture(scope="session")
def fine_geom():
    return Geometry(1.0, 1.0, 128, 128)
