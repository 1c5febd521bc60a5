"""Scalar spectral spaces on the channel.

Density-like scalars are represented in a tensor basis that is periodic in x
and satisfies a homogeneous Neumann condition at the walls:

    rho(x, y) = sum_{p, m} C[p, m] * e_p(x) * cos(m pi y / H)

where e_0 = 1 and e_{2k-1} = cos(2 pi k x / Lx), e_{2k} = sin(2 pi k x / Lx).
An auxiliary sine family sin(m pi y / H) (m >= 1) carries wall-normal fluxes
such as rho * u_y, which vanish at the walls.

Analysis from grid values is the quadrature L2 projection onto the retained
modes; with the oversampled grids enforced by Geometry.check_dealiasing this
projection is alias-free for products of resolved fields.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import Geometry


def _x_family(x: np.ndarray, kx: int, Lx: float) -> np.ndarray:
    """Evaluate the periodic family {1, cos, sin, ...} at points x.

    Returns an array of shape (len(x), 2*kx + 1) ordered
    [1, cos(1), sin(1), ..., cos(kx), sin(kx)].
    """
    cols = [np.ones_like(x)]
    for k in range(1, kx + 1):
        w = 2.0 * np.pi * k / Lx
        cols.append(np.cos(w * x))
        cols.append(np.sin(w * x))
    return np.stack(cols, axis=1)


def _x_family_dx(x: np.ndarray, kx: int, Lx: float) -> np.ndarray:
    cols = [np.zeros_like(x)]
    for k in range(1, kx + 1):
        w = 2.0 * np.pi * k / Lx
        cols.append(-w * np.sin(w * x))
        cols.append(w * np.cos(w * x))
    return np.stack(cols, axis=1)


def _weighted_left_inverse(B: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Return A with A @ B = I, where A is the w-weighted L2 projector."""
    BW = B.T * w[None, :]
    return np.linalg.solve(BW @ B, BW)


class ScalarSpace:
    """Cosine/Fourier tensor space for Neumann-compatible scalars.

    Args:
        geom: channel geometry carrying the quadrature grids.
        kx: highest retained x wavenumber.
        ky: highest retained y cosine index.
    """

    def __init__(self, geom: Geometry, kx: int, ky: int):
        if kx < 0 or ky < 1:
            raise ConfigError("scalar space requires kx >= 0 and ky >= 1")
        geom.check_dealiasing(kx, ky, context="scalar space")
        self.geom = geom
        self.kx = kx
        self.ky = ky
        self.P = 2 * kx + 1
        self.M = ky + 1  # cosine columns m = 0..ky

        # Synthesis matrices on the quadrature grid.
        self.Ex = _x_family(geom.x, kx, geom.Lx)                    # (Nx, P)
        self.Ex_dx = _x_family_dx(geom.x, kx, geom.Lx)
        m = np.arange(self.M)
        self.Cy = np.cos(np.outer(geom.y, m) * (np.pi / geom.H))    # (Ny, M)
        ms = np.arange(1, ky + 1)
        self.Sy = np.sin(np.outer(geom.y, ms) * (np.pi / geom.H))   # (Ny, ky)

        # Quadrature-exact analysis (left inverses of the synthesis maps).
        self.Ax = _weighted_left_inverse(self.Ex, geom.wx)          # (P, Nx)
        self.Ayc = _weighted_left_inverse(self.Cy, geom.wy)         # (M, Ny)
        self.Ays = _weighted_left_inverse(self.Sy, geom.wy)         # (ky, Ny)

        # d/dx in coefficient space: cos_k -> -w_k sin_k, sin_k -> w_k cos_k.
        Dx = np.zeros((self.P, self.P))
        for k in range(1, kx + 1):
            w = 2.0 * np.pi * k / geom.Lx
            Dx[2 * k, 2 * k - 1] = -w
            Dx[2 * k - 1, 2 * k] = w
        self.Dx = Dx

        # Laplacian multiplier per coefficient (periodic x, Neumann y).
        kx_of_p = np.concatenate(([0], np.repeat(np.arange(1, kx + 1), 2)))
        wx2 = (2.0 * np.pi * kx_of_p / geom.Lx) ** 2
        wy2 = (np.pi * m / geom.H) ** 2
        self.lap = -(wx2[:, None] + wy2[None, :])                   # (P, M)

        # Wall traces of the cosine columns: cos(0) = 1, cos(m pi) = (-1)^m.
        self.wall_cos = np.stack([np.ones(self.M), (-1.0) ** m])    # (2, M)
        self.wall_sin_dy = np.stack([np.ones(self.M), (-1.0) ** m]) * (np.pi * m / geom.H)

    # ------------------------------------------------------------------
    # transforms
    # ------------------------------------------------------------------

    def synth(self, C: np.ndarray) -> np.ndarray:
        """Coefficients (P, M) -> flat grid values (Nx*Ny,)."""
        return (self.Ex @ C @ self.Cy.T).ravel()

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Flat grid values -> coefficients (quadrature L2 projection)."""
        V = values.reshape(self.geom.quad_x, self.geom.quad_y)
        return self.Ax @ V @ self.Ayc.T

    def analyze_sin(self, values: np.ndarray) -> np.ndarray:
        """Project a wall-vanishing flat field onto the sine family.

        Returns coefficients of shape (P, ky) for sin(m pi y / H), m >= 1.
        """
        V = values.reshape(self.geom.quad_x, self.geom.quad_y)
        return self.Ax @ V @ self.Ays.T

    def dy_of_sin(self, S: np.ndarray) -> np.ndarray:
        """d/dy of a sine-family field, expressed in cosine coefficients."""
        out = np.zeros((self.P, self.M))
        ms = np.arange(1, self.ky + 1)
        out[:, 1:] = S * (np.pi * ms / self.geom.H)[None, :]
        return out

    # ------------------------------------------------------------------
    # calculus on coefficients
    # ------------------------------------------------------------------

    def grad(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient on the flat grid: (d/dx, d/dy)."""
        gx = (self.Ex @ (self.Dx @ C) @ self.Cy.T).ravel()
        ms = np.arange(1, self.ky + 1)
        Sdy = -C[:, 1:] * (np.pi * ms / self.geom.H)[None, :]
        gy = (self.Ex @ Sdy @ self.Sy.T).ravel()
        return gx, gy

    def laplacian_coeffs(self, C: np.ndarray) -> np.ndarray:
        return self.lap * C

    def wall_values(self, C: np.ndarray) -> np.ndarray:
        """Trace at the two walls: shape (2, Nx)."""
        return np.stack([self.Ex @ (C @ self.wall_cos[w]) for w in (0, 1)])

    def mean_zero_mass(self, C: np.ndarray) -> float:
        """Integral of the field over the channel (only the (0,0) mode counts)."""
        return float(C[0, 0]) * self.geom.area

    def meta(self) -> dict:
        return {"kx": self.kx, "ky": self.ky}


@dataclass
class ScalarSpectralField:
    """A scalar snapshot: coefficients plus an optional grid-value cache.

    The cache, when present, must match the transform of the coefficients;
    `validate` enforces this to 1e-12 relative to the field scale.
    """

    space: ScalarSpace
    coeffs: np.ndarray
    grid_values: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.P, self.space.M):
            raise ConfigError(
                f"coefficient array has shape {self.coeffs.shape}, "
                f"expected {(self.space.P, self.space.M)}"
            )

    def values(self) -> np.ndarray:
        if self.grid_values is None:
            self.grid_values = self.space.synth(self.coeffs)
        return self.grid_values

    def validate(self) -> None:
        if not np.all(np.isfinite(self.coeffs)):
            raise ConfigError("scalar field has non-finite coefficients")
        if self.grid_values is not None:
            ref = self.space.synth(self.coeffs)
            scale = max(1.0, float(np.max(np.abs(ref))))
            if np.max(np.abs(self.grid_values - ref)) > 1e-12 * scale:
                raise ConfigError("cached grid values disagree with coefficients")

    @classmethod
    def from_grid(cls, space: ScalarSpace, values: np.ndarray) -> "ScalarSpectralField":
        return cls(space, space.analyze(values))
