"""Manufactured-solution error studies.

A prescribed analytic pair (rho*, u*) is turned into an exact solution of
the regularized system by deriving, symbolically, the body force f* and the
continuity source S_c that make the pair satisfy

    dt rho* + div(rho* u*) - eps Lap rho* = S_c,
    dt(rho* u*) + div(rho* u* x u*) + grad p(rho*)
        - div(2 nu D(u*) + lam div u* Id) + eps grad(u*) grad(rho*) = rho* f*.

Running the solver with these data and measuring L2(space-time) distances to
the pair gives the discretization error directly; the studies below refine
dt (temporal order) and the mode cutoffs (spectral order).

Walls must be frictionless for these runs (g = 0): a slipping exact solution
would otherwise require a boundary forcing that no body force represents.
The pair itself must satisfy u*.n = 0 and the natural condition
d(u*_x)/dy = 0 on both walls, be x-periodic, and keep rho* positive.
"""

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .basis import build_velocity_basis, project_L2
from .diagnostics import ResidualReport
from .errors import ConfigError
from .geometry import Geometry
from .momentum import FluidParams, ForceField, fixed_point_solve
from .spectral import ScalarSpace

X, Y, T = sp.symbols("x y t", real=True)


def _grid_fn(expr, geom: Geometry):
    """Compile a sympy field to a callable t -> flat quadrature-grid values."""
    fn = sp.lambdify((T, X, Y), expr, "numpy")
    Xf, Yf = geom.X.ravel(), geom.Y.ravel()

    def call(t: float) -> np.ndarray:
        out = np.asarray(fn(t, Xf, Yf), dtype=float)
        if out.shape != Xf.shape:
            out = np.full(Xf.shape, float(out))
        return out

    return call


@dataclass
class ManufacturedPair:
    """Analytic (rho*, u*) candidate with its admissibility checks."""

    name: str
    rho: sp.Expr
    ux: sp.Expr
    uy: sp.Expr
    Lx: float
    H: float
    _checked: bool = field(default=False, repr=False)

    def validate(self, t_end: float, samples: int = 9) -> None:
        """Check u.n = 0, zero wall shear, x-periodicity and rho > 0.

        All conditions are probed numerically on a sample lattice; violations
        raise ConfigError naming the broken condition.
        """
        ts = np.linspace(0.0, t_end, samples)
        xs = np.linspace(0.0, self.Lx, 2 * samples, endpoint=False)
        tg, xg = np.meshgrid(ts, xs, indexing="ij")
        uy_fn = sp.lambdify((T, X, Y), self.uy, "numpy")
        dux_fn = sp.lambdify((T, X, Y), sp.diff(self.ux, Y), "numpy")
        for wall_y in (0.0, self.H):
            vals = np.asarray(uy_fn(tg, xg, np.full_like(xg, wall_y)), dtype=float)
            if np.max(np.abs(vals)) > 1e-12:
                raise ConfigError(
                    f"pair '{self.name}' violates u.n = 0 at y = {wall_y}")
            shear = np.asarray(dux_fn(tg, xg, np.full_like(xg, wall_y)), dtype=float)
            if np.max(np.abs(shear)) > 1e-12:
                raise ConfigError(
                    f"pair '{self.name}' has nonzero wall shear d(ux)/dy at y = {wall_y}")
        ys = np.linspace(0.0, self.H, 2 * samples)
        for expr, label in ((self.rho, "rho"), (self.ux, "ux"), (self.uy, "uy")):
            fn = sp.lambdify((T, X, Y), expr, "numpy")
            for t in ts:
                left = np.asarray(fn(t, np.zeros_like(ys), ys), dtype=float)
                right = np.asarray(fn(t, np.full_like(ys, self.Lx), ys), dtype=float)
                if np.max(np.abs(left - right)) > 1e-12:
                    raise ConfigError(
                        f"pair '{self.name}' field {label} is not x-periodic")
        rho_fn = sp.lambdify((T, X, Y), self.rho, "numpy")
        tg3, xg3, yg3 = np.meshgrid(ts, xs, ys, indexing="ij")
        rho_vals = np.asarray(rho_fn(tg3, xg3, yg3), dtype=float)
        if rho_vals.size == 1:
            rho_vals = np.full(tg3.shape, float(rho_vals))
        if np.min(rho_vals) <= 0.0:
            raise ConfigError(
                f"pair '{self.name}' loses density positivity "
                f"(min rho* = {np.min(rho_vals):.3g})")
        self._checked = True

    def forcing(self, params: FluidParams):
        """Symbolic body force and continuity source closing the system."""
        rho, ux, uy = self.rho, self.ux, self.uy
        p_tot = params.a * rho ** params.gamma + params.alpha * rho ** params.beta
        div_u = sp.diff(ux, X) + sp.diff(uy, Y)
        sxx = 2 * params.nu * sp.diff(ux, X) + params.lam * div_u
        sxy = params.nu * (sp.diff(ux, Y) + sp.diff(uy, X))
        syy = 2 * params.nu * sp.diff(uy, Y) + params.lam * div_u
        mom_x = (sp.diff(rho * ux, T)
                 + sp.diff(rho * ux * ux, X) + sp.diff(rho * ux * uy, Y)
                 + sp.diff(p_tot, X) - sp.diff(sxx, X) - sp.diff(sxy, Y)
                 + params.eps * (sp.diff(ux, X) * sp.diff(rho, X)
                                 + sp.diff(ux, Y) * sp.diff(rho, Y)))
        mom_y = (sp.diff(rho * uy, T)
                 + sp.diff(rho * uy * ux, X) + sp.diff(rho * uy * uy, Y)
                 + sp.diff(p_tot, Y) - sp.diff(sxy, X) - sp.diff(syy, Y)
                 + params.eps * (sp.diff(uy, X) * sp.diff(rho, X)
                                 + sp.diff(uy, Y) * sp.diff(rho, Y)))
        source = (sp.diff(rho, T) + sp.diff(rho * ux, X) + sp.diff(rho * uy, Y)
                  - params.eps * (sp.diff(rho, X, 2) + sp.diff(rho, Y, 2)))
        return mom_x / rho, mom_y / rho, source


def polynomial_pair(Lx: float = 1.0, H: float = 1.0, amp: float = 0.1) -> ManufacturedPair:
    """A pair in the span of the first velocity/density modes.

    Being exactly representable, its spatial discretization error vanishes
    and any remaining error isolates the time integrator.
    """
    kx = 2 * sp.pi * X / Lx
    my = sp.pi * Y / H
    wt_ = 2 * sp.pi * T
    ux = amp * (sp.Rational(3, 5) + sp.sin(kx)) * sp.cos(my) * (1 + sp.sin(wt_) / 2)
    uy = amp * sp.cos(kx) * sp.sin(my) * sp.cos(wt_)
    rho = 1 + sp.Rational(3, 20) * sp.cos(wt_) * sp.cos(kx) * sp.cos(my)
    return ManufacturedPair("polynomial", rho, ux, uy, Lx, H)


def smooth_pair(Lx: float = 1.0, H: float = 1.0, amp: float = 0.15) -> ManufacturedPair:
    """A smooth pair with full (exponentially decaying) spectra.

    Every mode-cutoff refinement leaves a visible tail, making it the probe
    for spectral-in-n error decay.
    """
    kx = 2 * sp.pi * X / Lx
    my = sp.pi * Y / H
    wt_ = 2 * sp.pi * T
    ux = (amp * (1 + sp.sin(wt_) / 2) * sp.exp(sp.cos(kx) / 2)
          * sp.cos(my) * sp.exp(sp.cos(my) / 5))
    uy = (amp * sp.cos(wt_ + sp.Rational(1, 2)) * sp.sin(kx)
          * sp.sin(my) * sp.exp(sp.cos(my) / 3))
    rho = 1 + sp.Rational(1, 5) * sp.cos(wt_) * sp.cos(my) * sp.exp(2 * sp.cos(kx) / 5)
    return ManufacturedPair("smooth", rho, ux, uy, Lx, H)


def constant_pair(Lx: float = 1.0, H: float = 1.0, rho0: float = 1.0) -> ManufacturedPair:
    """The rest state: zero velocity and uniform density."""
    return ManufacturedPair("constant", sp.Float(rho0), sp.Integer(0), sp.Integer(0),
                            Lx, H)


def manufactured_solution_residual(pair: ManufacturedPair, geom: Geometry,
                                   kx: int, ky: int, params: FluidParams,
                                   t_end: float, dt: float,
                                   tolerance: float = np.inf,
                                   tol_fp: float = 1e-11,
                                   max_iter: int = 60) -> ResidualReport:
    """Solve with the pair's forcing and report L2(space-time) errors.

    The report's value is the larger of the two relative errors (density,
    velocity); absolute and relative errors sit in the context.
    """
    if params.g != (0.0, 0.0):
        raise ConfigError("manufactured runs require frictionless walls (g = (0, 0))")
    pair.validate(t_end)
    params.validate()
    space = ScalarSpace(geom, 2 * kx, 2 * ky)
    basis = build_velocity_basis(geom, kx, ky)
    fx_e, fy_e, src_e = pair.forcing(params)
    fx_fn, fy_fn = _grid_fn(fx_e, geom), _grid_fn(fy_e, geom)
    run_params = FluidParams(
        nu=params.nu, lam=params.lam, a=params.a, gamma=params.gamma,
        beta=params.beta, alpha=params.alpha, eps=params.eps,
        delta=params.delta, g=params.g,
        f=ForceField(lambda t: (fx_fn(t), fy_fn(t)), description=f"mms:{pair.name}"),
    )
    rho_fn, ux_fn, uy_fn = (_grid_fn(e, geom) for e in (pair.rho, pair.ux, pair.uy))
    rho0 = space.analyze(rho_fn(0.0))
    u0 = project_L2(basis, ux_fn(0.0), uy_fn(0.0))
    traj, info = fixed_point_solve(
        space, basis, run_params, rho0, u0, t_end, dt,
        tol_fp=tol_fp, max_iter=max_iter, source_fn=_grid_fn(src_e, geom),
    )
    wt = geom.wt
    K = traj.times.size - 1
    trap = np.concatenate(([0.5], np.ones(K - 1), [0.5])) * dt
    sq_rho = np.empty(K + 1)
    sq_u = np.empty(K + 1)
    sq_rho_ref = np.empty(K + 1)
    sq_u_ref = np.empty(K + 1)
    for k in range(K + 1):
        t = float(traj.times[k])
        rho_err = space.synth(traj.rho_coeffs[k]) - rho_fn(t)
        ux_k, uy_k = basis.velocity(traj.u_coeffs[k])
        ux_err, uy_err = ux_k - ux_fn(t), uy_k - uy_fn(t)
        sq_rho[k] = float(wt @ (rho_err * rho_err))
        sq_u[k] = float(wt @ (ux_err * ux_err + uy_err * uy_err))
        sq_rho_ref[k] = float(wt @ (rho_fn(t) ** 2))
        sq_u_ref[k] = float(wt @ (ux_fn(t) ** 2 + uy_fn(t) ** 2))
    rho_l2 = float(np.sqrt(trap @ sq_rho))
    u_l2 = float(np.sqrt(trap @ sq_u))
    rho_ref = float(np.sqrt(trap @ sq_rho_ref))
    u_ref = float(np.sqrt(trap @ sq_u_ref))
    rho_rel = rho_l2 / rho_ref if rho_ref > 0 else rho_l2
    u_rel = u_l2 / u_ref if u_ref > 0 else u_l2
    return ResidualReport(
        name=f"mms[{pair.name}]",
        value=max(rho_rel, u_rel),
        tolerance=tolerance,
        context={
            "rho_error": rho_l2, "u_error": u_l2,
            "rho_relative": rho_rel, "u_relative": u_rel,
            "kx": kx, "ky": ky, "dt": dt, "t_end": t_end,
            "iterations": info.iterations,
        },
    )


def mms_dt_study(pair: ManufacturedPair, geom: Geometry, kx: int, ky: int,
                 params: FluidParams, t_end: float, dts) -> dict:
    """Refine dt at fixed spatial resolution and fit the temporal order."""
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 2:
        raise ConfigError("a dt study needs at least two step sizes")
    reports = [manufactured_solution_residual(pair, geom, kx, ky, params, t_end, d)
               for d in dts]
    errors = [max(r.context["rho_error"], r.context["u_error"]) for r in reports]
    fit = np.polyfit(np.log(dts), np.log(errors), 1)
    pairwise = [float(np.log(errors[i] / errors[i + 1])
                      / np.log(dts[i] / dts[i + 1]))
                for i in range(len(dts) - 1)]
    return {
        "dts": dts,
        "errors": errors,
        "reports": reports,
        "order": float(fit[0]),
        "pairwise_orders": pairwise,
    }


def mms_resolution_study(pair: ManufacturedPair, params: FluidParams,
                         t_end: float, dt: float, levels,
                         quad: int = 32) -> dict:
    """Double the mode cutoffs at fixed dt and measure the decay slope.

    Args:
        levels: iterable of (kx, ky) cutoffs, each a strict refinement.

    Returns:
        dict with per-level errors and log2 slopes per doubling.
    """
    levels = [tuple(level) for level in levels]
    if len(levels) < 2 or any(b[0] <= a[0] or b[1] <= a[1]
                              for a, b in zip(levels, levels[1:])):
        raise ConfigError("resolution levels must strictly increase")
    reports = []
    for kx, ky in levels:
        geom = Geometry(pair.Lx, pair.H, quad, quad)
        reports.append(manufactured_solution_residual(
            pair, geom, kx, ky, params, t_end, dt))
    errors = [max(r.context["rho_error"], r.context["u_error"]) for r in reports]
    slopes = [float(np.log2(errors[i + 1] / errors[i])
                    / np.log2(levels[i + 1][0] / levels[i][0]))
              for i in range(len(levels) - 1)]
    return {
        "levels": levels,
        "errors": errors,
        "reports": reports,
        "slopes_per_doubling": slopes,
    }
