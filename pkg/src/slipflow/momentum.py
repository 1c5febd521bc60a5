"""Galerkin momentum solver for the regularized compressible system.

For a frozen transport velocity w and its density rho(w), the velocity
coefficients c(t) solve the linear ODE system

    d/dt [ M_rho(t) c(t) ] = N(w, rho, c)(t),      c(0) = u0,

where M_rho is the density-weighted mass operator and N collects convection,
viscous stresses, total pressure a rho^gamma + alpha rho^beta, body force,
the diffusion-compensation term -eps (grad u)(grad rho), and the smoothed
wall friction -g grad_j_delta(w) paired with the mode traces.

Time stepping is the trapezoidal rule in the product variable p = M c with a
single explicit corrector pass for the new-node load; the outer nonlinearity
w -> u is resolved by damped Picard iteration over whole trajectories (or
step-locally within each dt when configured).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import GalerkinBasis, VelocityCoeffs
from .density import SourceFn, solve_density_trajectory
from .errors import ConfigError, ConvergenceError, PositivityError, StepSizeError
from .friction import grad_j_delta, j_delta
from .spectral import ScalarSpace, ScalarSpectralField

logger = logging.getLogger(__name__)

_BLOWUP_FACTOR = 1e8


class ForceField:
    """Body force on the quadrature grid, possibly time dependent."""

    def __init__(self, fn: Callable[[float], tuple[np.ndarray, np.ndarray]],
                 description: str = ""):
        self._fn = fn
        self.description = description

    @classmethod
    def constant(cls, fx: np.ndarray, fy: np.ndarray, description: str = "constant"):
        fx = np.asarray(fx, dtype=float)
        fy = np.asarray(fy, dtype=float)
        return cls(lambda t: (fx, fy), description)

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return self._fn(t)


@dataclass
class FluidParams:
    """Physical and regularization constants with their admissibility gates."""

    nu: float
    lam: float
    a: float
    gamma: float
    beta: float
    alpha: float
    eps: float
    delta: float
    g: tuple[float, float]  # friction thresholds at walls (y=0, y=H)
    f: Optional[ForceField] = None

    def validate(self) -> None:
        checks = [
            (self.nu > 0, f"shear viscosity must satisfy nu > 0 (got nu = {self.nu})"),
            (self.nu + self.lam >= 0, f"viscosities must satisfy nu + lambda >= 0 "
                                      f"(got nu + lambda = {self.nu + self.lam})"),
            (self.a > 0, f"pressure constant must satisfy a > 0 (got a = {self.a})"),
            (self.gamma > 1.5, f"adiabatic exponent must satisfy gamma > 3/2 (got gamma = {self.gamma})"),
            (self.beta > max(self.gamma, 4.0),
             f"artificial exponent must satisfy beta > max(gamma, 4) (got beta = {self.beta})"),
            (self.alpha > 0, f"artificial pressure must satisfy alpha > 0 (got alpha = {self.alpha})"),
            (self.eps > 0, f"density diffusion must satisfy eps > 0 (got eps = {self.eps})"),
            (self.delta > 0, f"friction smoothing must satisfy delta > 0 (got delta = {self.delta})"),
            (self.g[0] >= 0 and self.g[1] >= 0,
             f"friction thresholds must satisfy g >= 0 (got g = {self.g})"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def pressure(self, rho: np.ndarray) -> np.ndarray:
        """Total pressure a rho^gamma + alpha rho^beta."""
        return self.a * rho ** self.gamma + self.alpha * rho ** self.beta

    def as_dict(self) -> dict:
        return {
            "nu": self.nu, "lambda": self.lam, "a": self.a, "gamma": self.gamma,
            "beta": self.beta, "alpha": self.alpha, "eps": self.eps,
            "delta": self.delta, "g": list(self.g),
            "f": self.f.description if self.f is not None else None,
        }


# ----------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------


def assemble_mass_operator(basis: GalerkinBasis, rho_flat: np.ndarray) -> np.ndarray:
    """Density-weighted Gram matrix M[j, k] = int rho phi_j . phi_k dx."""
    mn = float(np.min(rho_flat))
    if mn <= 0.0:
        raise PositivityError(f"mass operator needs positive density (min rho = {mn:.3g})")
    w = basis.geom.wt * rho_flat
    M = basis.vx @ (w[None, :] * basis.vx).T + basis.vy @ (w[None, :] * basis.vy).T
    return 0.5 * (M + M.T)


def friction_load(basis: GalerkinBasis, params: FluidParams,
                  w_wall: np.ndarray) -> np.ndarray:
    """Boundary load int_Gamma g grad_j_delta(w) . phi_k over both walls.

    Args:
        w_wall: tangential wall trace of the frozen velocity, shape (2, Nx).
    """
    out = np.zeros(basis.n)
    for w in (0, 1):
        vec = np.stack([w_wall[w], np.zeros_like(w_wall[w])], axis=-1)
        gj = grad_j_delta(vec, params.delta)[:, 0]
        out += params.g[w] * basis.geom.wall_weight * (basis.wall_vx[:, w, :] @ gj)
    return out


class MomentumAssembler:
    """Shared quadrature data for momentum loads at one parameter set.

    The density-weighted Gram matrix is needed at every time node of every
    Picard iterate; assembling it from quadrature each time dominates the
    solve.  Since the density lives in a fixed spectral space, M(rho) is
    linear in the coefficients, so the per-mode matrices

        T[pm] = int e_p(x) cos(m pi y / H) phi_j . phi_k

    are precomputed once and each node's operator is a single contraction
    rho_coeffs . T.  For bases too large for the tensor (entry budget
    mass_tensor_entries) the assembler falls back to direct quadrature.
    """

    def __init__(self, basis: GalerkinBasis, space: ScalarSpace, params: FluidParams,
                 mass_tensor_entries: int = 30_000_000):
        self.basis = basis
        self.space = space
        self.params = params
        self.visc = 2.0 * params.nu * basis.d_sym + params.lam * basis.d_div
        n = basis.n
        if space.P * space.M * n * n <= mass_tensor_entries:
            pair = (basis.vx[:, None, :] * basis.vx[None, :, :]
                    + basis.vy[:, None, :] * basis.vy[None, :, :]).reshape(n * n, -1)
            modes = np.einsum("xp,ym->pmxy", space.Ex, space.Cy).reshape(
                space.P * space.M, -1)
            T = (modes * basis.geom.wt) @ pair.T
            T3 = T.reshape(-1, n, n)
            T3 = 0.5 * (T3 + T3.transpose(0, 2, 1))
            self.mass_tensor = T3.reshape(-1, n * n)
        else:
            self.mass_tensor = None

    def mass_operator(self, rho_coeffs: np.ndarray, rho_grid: np.ndarray) -> np.ndarray:
        """Density-weighted Gram matrix, by tensor contraction when available."""
        if self.mass_tensor is None:
            return assemble_mass_operator(self.basis, rho_grid)
        n = self.basis.n
        return (rho_coeffs.ravel() @ self.mass_tensor).reshape(n, n)

    def node_context(self, rho_coeffs: np.ndarray, w_coeffs: np.ndarray, t: float) -> dict:
        """Per-node fields and loads that do not depend on the unknown u."""
        p = self.params
        rho = self.space.synth(rho_coeffs)
        mn = float(np.min(rho))
        if mn <= 0.0:
            raise PositivityError(f"momentum assembly needs positive density at t = {t:.6g} "
                                  f"(min rho = {mn:.3g})")
        grx, gry = self.space.grad(rho_coeffs)
        wx, wy = self.basis.velocity(w_coeffs)
        mass = self.mass_operator(rho_coeffs, rho)
        chol = cho_factor(mass)
        wt = self.basis.geom.wt
        load = self.basis.div @ (wt * p.pressure(rho))
        if p.f is not None:
            fx, fy = p.f(t)
            load = load + self.basis.vx @ (wt * rho * fx) + self.basis.vy @ (wt * rho * fy)
        load = load - friction_load(self.basis, p, self.basis.wall_velocity(w_coeffs))
        return {
            "t": t, "rho": rho, "grx": grx, "gry": gry,
            "wx": wx, "wy": wy, "mass": mass, "chol": chol, "load": load,
        }

    def rhs(self, ctx: dict, c: np.ndarray) -> np.ndarray:
        """Full momentum load N(w, rho, u) for u given by coefficients c."""
        p = self.params
        b = self.basis
        wt = b.geom.wt
        ux, uy = b.velocity(c)
        gxx, gxy, gyx, gyy = b.velocity_grad(c)
        div_u = gxx + gyy
        rho, wx, wy = ctx["rho"], ctx["wx"], ctx["wy"]
        visc_diag = 2.0 * p.nu
        off = p.nu * (gxy + gyx)
        sxx = rho * wx * ux - visc_diag * gxx - p.lam * div_u
        sxy = rho * wx * uy - off
        syx = rho * wy * ux - off
        syy = rho * wy * uy - visc_diag * gyy - p.lam * div_u
        vx_field = -p.eps * (gxx * ctx["grx"] + gyx * ctx["gry"])
        vy_field = -p.eps * (gxy * ctx["grx"] + gyy * ctx["gry"])
        out = (
            b.gxx @ (wt * sxx) + b.gxy @ (wt * sxy)
            + b.gyx @ (wt * syx) + b.gyy @ (wt * syy)
            + b.vx @ (wt * vx_field) + b.vy @ (wt * vy_field)
        )
        return out + ctx["load"]


def momentum_rhs(basis: GalerkinBasis, space: ScalarSpace, params: FluidParams,
                 w: VelocityCoeffs, rho: ScalarSpectralField, u: VelocityCoeffs,
                 t: float = 0.0) -> np.ndarray:
    """One-shot evaluation of the momentum load vector N(w, rho, u)."""
    asm = MomentumAssembler(basis, space, params)
    ctx = asm.node_context(rho.coeffs, w.c, t)
    return asm.rhs(ctx, u.c)


# ----------------------------------------------------------------------
# linearized trajectory solve
# ----------------------------------------------------------------------


def linearized_solve(assembler: MomentumAssembler, rho_traj: np.ndarray,
                     w_traj: np.ndarray, u0: np.ndarray, dt: float,
                     t0: float = 0.0) -> np.ndarray:
    """March the linear momentum system over the trajectory time grid.

    Uses the trapezoidal rule on p = M c with one corrector pass: the load at
    the new node is evaluated at the explicit predictor before the half-step
    average is applied.

    Returns:
        Velocity coefficients at every node, shape (K+1, n).
    """
    K = w_traj.shape[0] - 1
    n = assembler.basis.n
    out = np.empty((K + 1, n))
    out[0] = u0
    limit = _BLOWUP_FACTOR * (1.0 + float(np.max(np.abs(u0))))
    ctx = assembler.node_context(rho_traj[0], w_traj[0], t0)
    p_vec = ctx["mass"] @ u0
    for k in range(K):
        t_next = t0 + (k + 1) * dt
        n_k = assembler.rhs(ctx, out[k])
        ctx_next = assembler.node_context(rho_traj[k + 1], w_traj[k + 1], t_next)
        c_star = cho_solve(ctx_next["chol"], p_vec + dt * n_k)
        n_star = assembler.rhs(ctx_next, c_star)
        p_vec = p_vec + 0.5 * dt * (n_k + n_star)
        out[k + 1] = cho_solve(ctx_next["chol"], p_vec)
        ctx = ctx_next
        if not np.all(np.isfinite(out[k + 1])) or np.max(np.abs(out[k + 1])) > limit:
            raise StepSizeError(f"momentum corrector diverged at t = {t_next:.6g}")
    return out


# ----------------------------------------------------------------------
# coupled fixed point
# ----------------------------------------------------------------------


@dataclass
class FixedPointInfo:
    """Iteration log and certificates from the Picard solve."""

    iterations: list  # (iteration, residual, damping)
    converged: bool
    final_residual: float
    contraction_factors: list
    coeff_max_seen: float
    coeff_bound: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "iterations": [[int(i), float(r), float(d)] for i, r, d in self.iterations],
            "converged": self.converged,
            "final_residual": self.final_residual,
            "contraction_factors": [float(r) for r in self.contraction_factors],
            "coeff_max_seen": self.coeff_max_seen,
            "coeff_bound": self.coeff_bound,
        }


@dataclass
class Trajectory:
    """A computed space-time solution pair on a uniform time grid."""

    times: np.ndarray
    rho_coeffs: np.ndarray  # (K+1, P, M)
    u_coeffs: np.ndarray    # (K+1, n)
    space: ScalarSpace
    basis: GalerkinBasis
    params: FluidParams
    provenance: dict = field(default_factory=dict)
    source_fn: Optional[SourceFn] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ConfigError("trajectory times must be strictly increasing")
        K1 = self.times.size
        if self.rho_coeffs.shape[0] != K1 or self.u_coeffs.shape[0] != K1:
            raise ConfigError("trajectory arrays must share the time grid length")
        if self.rho_coeffs.shape[1:] != (self.space.P, self.space.M):
            raise ConfigError("density coefficient shape disagrees with the scalar space")
        if self.u_coeffs.shape[1] != self.basis.n:
            raise ConfigError("velocity coefficient count disagrees with the basis")
        if not (np.all(np.isfinite(self.rho_coeffs)) and np.all(np.isfinite(self.u_coeffs))):
            raise ConfigError("trajectory contains non-finite coefficients")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def rho_field(self, k: int) -> ScalarSpectralField:
        return ScalarSpectralField(self.space, self.rho_coeffs[k])

    def u_field(self, k: int) -> VelocityCoeffs:
        return VelocityCoeffs(self.basis, self.u_coeffs[k])


def _energy_bound_certificate(space: ScalarSpace, basis: GalerkinBasis,
                              params: FluidParams, rho0: np.ndarray, u0: np.ndarray,
                              t_end: float, rho_min_run: float) -> float:
    """Coefficient bound implied by the energy balance with friction dropped."""
    rho = space.synth(rho0)
    wt = space.geom.wt
    M0 = assemble_mass_operator(basis, rho)
    e0 = 0.5 * u0 @ M0 @ u0
    e0 += float(wt @ (params.a * rho ** params.gamma / (params.gamma - 1.0)))
    e0 += float(wt @ (params.alpha * rho ** params.beta / (params.beta - 1.0)))
    mass = float(wt @ rho)
    fmax = 0.0
    if params.f is not None:
        for t in np.linspace(0.0, t_end, 5):
            fx, fy = params.f(t)
            fmax = max(fmax, float(np.max(np.sqrt(fx * fx + fy * fy))))
    e_bound = (np.sqrt(e0) + t_end * fmax * np.sqrt(mass / 2.0)) ** 2
    return float(2.0 * np.sqrt(2.0 * e_bound / (rho_min_run * basis.gram_min_eig)))


def fixed_point_solve(space: ScalarSpace, basis: GalerkinBasis, params: FluidParams,
                      rho0: np.ndarray, u0: np.ndarray, t_end: float, dt: float,
                      tol_fp: float = 1e-9, max_iter: int = 50,
                      damping: float = 0.7, coupling: str = "trajectory",
                      source_fn: Optional[SourceFn] = None,
                      cfl_threshold: float = 1.0,
                      provenance: Optional[dict] = None) -> tuple[Trajectory, FixedPointInfo]:
    """Resolve the coupled density/momentum system by damped Picard iteration.

    Args:
        rho0: initial density coefficients (P, M).
        u0: initial velocity coefficients (n,).
        t_end, dt: uniform time grid; t_end / dt must be integral.
        tol_fp: stop when the max-over-time coefficient update drops below this.
        max_iter: iteration budget; exhaustion raises ConvergenceError.
        damping: Picard relaxation factor theta in (0, 1].
        coupling: "trajectory" iterates whole trajectories; "step_local"
            resolves the coupling within each time step instead.

    Returns:
        (Trajectory, FixedPointInfo).
    """
    params.validate()
    if not 0.0 < damping <= 1.0:
        raise ConfigError(f"damping must lie in (0, 1] (got {damping})")
    K = int(round(t_end / dt))
    if K < 1 or abs(K * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigError(f"t_end = {t_end} is not an integral multiple of dt = {dt}")
    times = np.arange(K + 1) * dt
    assembler = MomentumAssembler(basis, space, params)

    if coupling == "step_local":
        return _step_local_solve(assembler, space, basis, params, rho0, u0, times, dt,
                                 tol_fp, max_iter, damping, source_fn, cfl_threshold,
                                 provenance)
    if coupling != "trajectory":
        raise ConfigError(f"unknown coupling mode '{coupling}'")

    w = np.tile(u0, (K + 1, 1))
    history = []
    ratios = []
    coeff_max = float(np.max(np.abs(u0)))
    prev_res = None
    converged = False
    res = np.inf
    rho_traj = None
    for it in range(1, max_iter + 1):
        rho_traj = solve_density_trajectory(space, basis, w, rho0, params.eps, dt,
                                            source_fn=source_fn, cfl_threshold=cfl_threshold)
        u = linearized_solve(assembler, rho_traj, w, u0, dt)
        res = float(np.max(np.abs(u - w)))
        history.append((it, res, damping))
        logger.info("picard iteration %d: residual %.3e", it, res)
        coeff_max = max(coeff_max, float(np.max(np.abs(u))))
        if prev_res is not None and prev_res > 0:
            ratios.append(res / prev_res)
        prev_res = res
        if res <= tol_fp:
            w = u
            converged = True
            break
        w = (1.0 - damping) * w + damping * u
    if not converged:
        raise ConvergenceError(
            f"Picard iteration did not reach tol_fp = {tol_fp:.3g} in {max_iter} "
            f"iterations (last residual {res:.3e})"
        )
    # Final consistency pass: pair the converged velocity with its own density.
    rho_traj = solve_density_trajectory(space, basis, w, rho0, params.eps, dt,
                                        source_fn=source_fn, cfl_threshold=cfl_threshold)
    rho_min_run = min(float(np.min(space.synth(rho_traj[k]))) for k in range(K + 1))
    bound = _energy_bound_certificate(space, basis, params, rho0, u0, t_end, rho_min_run)
    info = FixedPointInfo(history, converged, res, ratios, coeff_max, bound)
    traj = Trajectory(times, rho_traj, w, space, basis, params,
                      provenance=provenance or {}, source_fn=source_fn)
    return traj, info


def _step_local_solve(assembler, space, basis, params, rho0, u0, times, dt,
                      tol_fp, max_iter, damping, source_fn, cfl_threshold,
                      provenance):
    """Picard coupling resolved within each time step."""
    from .density import DensityStepper

    K = times.size - 1
    stepper = DensityStepper(space, basis, params.eps, dt, cfl_threshold)
    rho = np.empty((K + 1, space.P, space.M))
    u = np.empty((K + 1, basis.n))
    rho[0] = rho0
    u[0] = u0
    history = []
    coeff_max = float(np.max(np.abs(u0)))
    for k in range(K):
        t = times[k]
        ctx_k = assembler.node_context(rho[k], u[k], t)
        p_vec = ctx_k["mass"] @ u[k]
        n_k = assembler.rhs(ctx_k, u[k])
        c_next = u[k].copy()
        res = np.inf
        for it in range(1, max_iter + 1):
            rho_next = stepper.step(rho[k], 0.5 * (u[k] + c_next), t, source_fn)
            if np.min(space.synth(rho_next)) <= 0.0:
                raise PositivityError(f"density lost positivity at t = {t + dt:.6g}")
            ctx_next = assembler.node_context(rho_next, c_next, t + dt)
            c_new = cho_solve(ctx_next["chol"],
                              p_vec + 0.5 * dt * (n_k + assembler.rhs(ctx_next, c_next)))
            res = float(np.max(np.abs(c_new - c_next)))
            if res <= tol_fp:
                c_next = c_new
                break
            c_next = c_next + damping * (c_new - c_next)
        else:
            raise ConvergenceError(
                f"step-local Picard stalled at t = {t:.6g} (residual {res:.3e})"
            )
        history.append((k + 1, res, damping))
        rho[k + 1] = rho_next
        u[k + 1] = c_next
        coeff_max = max(coeff_max, float(np.max(np.abs(c_next))))
    rho_min_run = min(float(np.min(space.synth(rho[k]))) for k in range(K + 1))
    bound = _energy_bound_certificate(space, basis, params, rho0, u0, float(times[-1]),
                                      rho_min_run)
    info = FixedPointInfo(history, True, history[-1][1] if history else 0.0, [],
                          coeff_max, bound)
    traj = Trajectory(times, rho, u, space, basis, params,
                      provenance=provenance or {}, source_fn=source_fn)
    return traj, info


# ----------------------------------------------------------------------
# stress evaluation
# ----------------------------------------------------------------------


def cauchy_stress(params: FluidParams, rho: np.ndarray,
                  grads: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]) -> dict:
    """Viscous-plus-pressure stress tensor on grid fields.

    Args:
        rho: density values.
        grads: velocity gradient fields (gxx, gxy, gyx, gyy) where the first
            index is the derivative direction.

    Returns:
        dict with components sxx, sxy, syy (sxy = syx by symmetry).
    """
    gxx, gxy, gyx, gyy = grads
    div = gxx + gyy
    p_tot = params.pressure(rho)
    return {
        "sxx": 2.0 * params.nu * gxx + params.lam * div - p_tot,
        "syy": 2.0 * params.nu * gyy + params.lam * div - p_tot,
        "sxy": params.nu * (gxy + gyx),
    }


def wall_tractions(params: FluidParams, basis: GalerkinBasis, space: ScalarSpace,
                   c: np.ndarray, rho_coeffs: np.ndarray) -> dict:
    """Normal and tangential components of sigma n on both walls.

    Returns:
        {"sigma_n": (2, Nx), "traction_tau_x": (2, Nx)} where row w refers to
        the wall with outward normal (0, -1) for w = 0 and (0, +1) for w = 1.
    """
    rho_wall = space.wall_values(rho_coeffs)
    gyx = np.einsum("j,jwx->wx", c, basis.wall_gyx)
    gyy = np.einsum("j,jwx->wx", c, basis.wall_gyy)
    gxx = np.einsum("j,jwx->wx", c, basis.wall_gxx)
    div = gxx + gyy
    p_tot = params.pressure(rho_wall)
    syy = 2.0 * params.nu * gyy + params.lam * div - p_tot
    sxy = params.nu * gyx  # gxy vanishes identically on the walls
    traction_tau = np.stack([-sxy[0], sxy[1]])
    return {"sigma_n": syy, "traction_tau_x": traction_tau}


def boundary_friction_power(basis: GalerkinBasis, params: FluidParams,
                            c: np.ndarray) -> float:
    """Instantaneous wall dissipation int_Gamma g grad_j_delta(u) . u."""
    w_wall = basis.wall_velocity(c)
    total = 0.0
    for w in (0, 1):
        vec = np.stack([w_wall[w], np.zeros_like(w_wall[w])], axis=-1)
        gj = grad_j_delta(vec, params.delta)[:, 0]
        total += params.g[w] * basis.geom.wall_weight * float(np.sum(gj * w_wall[w]))
    return total


def boundary_speed_integral(basis: GalerkinBasis, params: FluidParams,
                            c: np.ndarray) -> float:
    """Instantaneous limit-form wall dissipation int_Gamma g |u|."""
    w_wall = basis.wall_velocity(c)
    total = 0.0
    for w in (0, 1):
        total += params.g[w] * basis.geom.wall_weight * float(np.sum(np.abs(w_wall[w])))
    return total


def boundary_jdelta_integral(basis: GalerkinBasis, params: FluidParams,
                             c: np.ndarray) -> float:
    """Instantaneous smoothed wall integrand int_Gamma g j_delta(u)."""
    w_wall = basis.wall_velocity(c)
    total = 0.0
    for w in (0, 1):
        vec = np.stack([w_wall[w], np.zeros_like(w_wall[w])], axis=-1)
        total += params.g[w] * basis.geom.wall_weight * float(np.sum(j_delta(vec, params.delta)))
    return total
