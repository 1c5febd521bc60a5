"""Divergence-compatible Galerkin velocity basis on the channel.

Every mode is a trigonometric tensor product with zero normal trace at the
walls, so the discrete velocity space satisfies u . n = 0 by construction:

  * x-component modes  e(x) * cos(m pi y / H), m >= 0  (tangential slip at walls),
  * x-component modes  e(x) * sin(m pi y / H), m >= 1  (vanish at walls),
  * y-component modes  e(x) * sin(m pi y / H), m >= 1  (vanish at walls),

with e(x) in {1, cos(2 pi k x / Lx), sin(2 pi k x / Lx)}, k <= kx_max.  Modes
whose velocity vanishes identically on both walls are flagged interior; they
span the subspace used for boundary-free momentum tests.

Ordering is lexicographic in (component, y-family, k, m, x-parity) and is
serialized into archives so coefficient dumps are self-describing.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigError
from .geometry import Geometry


@dataclass(frozen=True)
class ModeSpec:
    """Closed-form description of one basis mode."""

    component: str  # "x" or "y"
    y_family: str   # "cos" or "sin"
    k: int          # x wavenumber
    m: int          # y mode index
    x_parity: str   # "cos" or "sin" (the k = 0 mode is "cos")

    def as_dict(self) -> dict:
        return {
            "component": self.component,
            "y_family": self.y_family,
            "k": self.k,
            "m": self.m,
            "x_parity": self.x_parity,
        }


def _x_eval(spec: ModeSpec, x: np.ndarray, Lx: float) -> tuple[np.ndarray, np.ndarray]:
    """Value and x-derivative of the periodic factor of a mode."""
    if spec.k == 0:
        return np.ones_like(x), np.zeros_like(x)
    w = 2.0 * np.pi * spec.k / Lx
    if spec.x_parity == "cos":
        return np.cos(w * x), -w * np.sin(w * x)
    return np.sin(w * x), w * np.cos(w * x)


def _y_eval(spec: ModeSpec, y: np.ndarray, H: float) -> tuple[np.ndarray, np.ndarray]:
    """Value and y-derivative of the wall-normal factor of a mode."""
    w = np.pi * spec.m / H
    if spec.y_family == "cos":
        return np.cos(w * y), -w * np.sin(w * y)
    return np.sin(w * y), w * np.cos(w * y)


def _enumerate_modes(kx_max: int, ky_max: int) -> list[ModeSpec]:
    modes = []
    groups = (
        ("x", "cos", range(0, ky_max + 1)),
        ("x", "sin", range(1, ky_max + 1)),
        ("y", "sin", range(1, ky_max + 1)),
    )
    for component, y_family, m_range in groups:
        for k in range(0, kx_max + 1):
            for m in m_range:
                for parity in (("cos",) if k == 0 else ("cos", "sin")):
                    modes.append(ModeSpec(component, y_family, k, m, parity))
    return modes


class GalerkinBasis:
    """Velocity basis with precomputed quadrature data.

    Attributes:
        geom: underlying geometry.
        kx_max, ky_max: retained wavenumber ranges.
        n: number of modes.
        modes: list of ModeSpec in archive order.
        interior: boolean array marking modes that vanish on both walls.
        gram: L2 Gram matrix of the modes (SPD).
        d_sym: matrix of symmetric-gradient products int D(phi_j):D(phi_k).
        d_div: matrix of divergence products int div(phi_j) div(phi_k).
    """

    def __init__(self, geom: Geometry, kx_max: int, ky_max: int,
                 modes: Sequence[ModeSpec] | None = None):
        if kx_max < 0 or ky_max < 1:
            raise ConfigError("velocity basis requires kx_max >= 0 and ky_max >= 1")
        geom.check_dealiasing(kx_max, ky_max, context="velocity basis")
        self.geom = geom
        self.kx_max = kx_max
        self.ky_max = ky_max
        self.modes = list(modes) if modes is not None else _enumerate_modes(kx_max, ky_max)
        self.n = len(self.modes)
        self.interior = np.array(
            [spec.y_family == "sin" for spec in self.modes], dtype=bool
        )
        self._tabulate()
        self._assemble_forms()

    # ------------------------------------------------------------------

    def _tabulate(self):
        geom = self.geom
        n, G, Nx = self.n, geom.n_points, geom.quad_x
        self.vx = np.zeros((n, G))
        self.vy = np.zeros((n, G))
        self.gxx = np.zeros((n, G))  # d/dx of the x-component
        self.gxy = np.zeros((n, G))  # d/dx of the y-component
        self.gyx = np.zeros((n, G))  # d/dy of the x-component
        self.gyy = np.zeros((n, G))  # d/dy of the y-component
        self.wall_vx = np.zeros((n, 2, Nx))
        self.wall_gyx = np.zeros((n, 2, Nx))
        self.wall_gyy = np.zeros((n, 2, Nx))
        self.wall_gxx = np.zeros((n, 2, Nx))

        y_walls = np.array([0.0, geom.H])
        for j, spec in enumerate(self.modes):
            ex, dex = _x_eval(spec, geom.x, geom.Lx)
            fy, dfy = _y_eval(spec, geom.y, geom.H)
            val = np.outer(ex, fy).ravel()
            ddx = np.outer(dex, fy).ravel()
            ddy = np.outer(ex, dfy).ravel()
            if spec.component == "x":
                self.vx[j] = val
                self.gxx[j] = ddx
                self.gyx[j] = ddy
            else:
                self.vy[j] = val
                self.gxy[j] = ddx
                self.gyy[j] = ddy
            fy_w, dfy_w = _y_eval(spec, y_walls, geom.H)
            for w in (0, 1):
                if spec.component == "x":
                    self.wall_vx[j, w] = ex * fy_w[w]
                    self.wall_gyx[j, w] = ex * dfy_w[w]
                    self.wall_gxx[j, w] = dex * fy_w[w]
                else:
                    self.wall_gyy[j, w] = ex * dfy_w[w]
        self.div = self.gxx + self.gyy

    def _assemble_forms(self):
        wt = self.geom.wt
        self.gram = self.vx @ (wt[None, :] * self.vx).T + self.vy @ (wt[None, :] * self.vy).T
        self.gram = 0.5 * (self.gram + self.gram.T)
        dxy = 0.5 * (self.gxy + self.gyx)
        self.d_sym = (
            self.gxx @ (wt[None, :] * self.gxx).T
            + 2.0 * (dxy @ (wt[None, :] * dxy).T)
            + self.gyy @ (wt[None, :] * self.gyy).T
        )
        self.d_sym = 0.5 * (self.d_sym + self.d_sym.T)
        self.d_div = self.div @ (wt[None, :] * self.div).T
        self.d_div = 0.5 * (self.d_div + self.d_div.T)
        self._gram_chol = cho_factor(self.gram)
        self.gram_min_eig = float(np.linalg.eigvalsh(self.gram)[0])
        if not self.gram_min_eig > 0:
            raise ConfigError("velocity basis Gram matrix is not positive definite")

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def velocity(self, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Grid values (u_x, u_y) of the combination sum c_j phi_j."""
        return c @ self.vx, c @ self.vy

    def velocity_grad(self, c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Grid values (d_x u_x, d_x u_y, d_y u_x, d_y u_y)."""
        return c @ self.gxx, c @ self.gxy, c @ self.gyx, c @ self.gyy

    def divergence(self, c: np.ndarray) -> np.ndarray:
        return c @ self.div

    def wall_velocity(self, c: np.ndarray) -> np.ndarray:
        """Tangential wall trace of the velocity, shape (2, Nx)."""
        return np.einsum("j,jwx->wx", c, self.wall_vx)

    def solve_gram(self, b: np.ndarray) -> np.ndarray:
        return cho_solve(self._gram_chol, b)

    def inner_product(self, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
        """L2 pairing of a flat vector field with every mode."""
        wt = self.geom.wt
        return self.vx @ (wt * fx) + self.vy @ (wt * fy)

    def subset(self, indices: Iterable[int]) -> "GalerkinBasis":
        """Restrict to a subset of modes (used for nested-space tests)."""
        idx = list(indices)
        specs = [self.modes[i] for i in idx]
        return GalerkinBasis(self.geom, self.kx_max, self.ky_max, modes=specs)

    def meta(self) -> dict:
        return {
            "kx_max": self.kx_max,
            "ky_max": self.ky_max,
            "n": self.n,
            "ordering": "(component, y_family, k, m, x_parity)",
            "modes": [spec.as_dict() for spec in self.modes],
            "interior": [bool(b) for b in self.interior],
        }


def build_velocity_basis(geom: Geometry, kx_max: int, ky_max: int) -> GalerkinBasis:
    """Construct the slip-compatible velocity basis on the given geometry."""
    return GalerkinBasis(geom, kx_max, ky_max)


def project_L2(basis: GalerkinBasis, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """L2-orthogonal projection of a flat grid vector field onto the basis.

    Args:
        basis: target velocity space.
        fx, fy: flat grid values of the field components.

    Returns:
        Coefficient vector of length basis.n.
    """
    return basis.solve_gram(basis.inner_product(fx, fy))


@dataclass
class VelocityCoeffs:
    """Velocity snapshot as coefficients over a GalerkinBasis."""

    basis: GalerkinBasis
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.basis.n,):
            raise ConfigError(f"coefficient vector has length {self.c.size}, expected {self.basis.n}")

    def velocity(self):
        return self.basis.velocity(self.c)

    def wall_trace(self):
        return self.basis.wall_velocity(self.c)

    def validate(self):
        if not np.all(np.isfinite(self.c)):
            raise ConfigError("velocity coefficients are not finite")


def vn_norm_surrogate(basis: GalerkinBasis, c: np.ndarray) -> float:
    """Collocation surrogate for the velocity-space norm.

    Returns max |div w| + max |grad w| (Frobenius) over the quadrature grid;
    it dominates the divergence sup-norm that drives density envelopes.
    """
    gxx, gxy, gyx, gyy = basis.velocity_grad(c)
    div_max = float(np.max(np.abs(gxx + gyy)))
    frob = np.sqrt(gxx * gxx + gxy * gxy + gyx * gyx + gyy * gyy)
    return div_max + float(np.max(frob))
