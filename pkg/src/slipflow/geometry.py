"""Channel geometry and quadrature grids.

The domain is a 2D channel, periodic in x with period Lx and bounded by two
flat walls y = 0 and y = H.  Integrals over the channel use a tensor-product
quadrature: a uniform grid in x (exact for trigonometric polynomials up to
the grid's Nyquist index) and Gauss-Legendre nodes in y.  Wall integrals use
the uniform x-grid restricted to y in {0, H}.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Wall bookkeeping: index 0 is the wall y = 0 with outward normal (0, -1),
# index 1 is the wall y = H with outward normal (0, +1).
WALL_NORMALS = ((0.0, -1.0), (0.0, 1.0))


@dataclass
class Geometry:
    """Periodic channel [0, Lx) x [0, H] with its quadrature rule.

    Attributes:
        Lx: channel period in x (> 0).
        H: wall separation (> 0).
        quad_x: number of uniform x quadrature points.
        quad_y: number of Gauss-Legendre y quadrature points.
    """

    Lx: float
    H: float
    quad_x: int
    quad_y: int

    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)
    wx: np.ndarray = field(init=False, repr=False)
    wy: np.ndarray = field(init=False, repr=False)
    X: np.ndarray = field(init=False, repr=False)
    Y: np.ndarray = field(init=False, repr=False)
    wt: np.ndarray = field(init=False, repr=False)
    wall_weight: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.Lx > 0 and self.H > 0):
            raise ConfigError("geometry requires Lx > 0 and H > 0")
        if self.quad_x < 4 or self.quad_y < 4:
            raise ConfigError("geometry requires at least 4 quadrature points per direction")
        self.x = np.arange(self.quad_x) * (self.Lx / self.quad_x)
        self.wx = np.full(self.quad_x, self.Lx / self.quad_x)
        nodes, weights = np.polynomial.legendre.leggauss(self.quad_y)
        self.y = 0.5 * self.H * (nodes + 1.0)
        self.wy = 0.5 * self.H * weights
        X2, Y2 = np.meshgrid(self.x, self.y, indexing="ij")
        self.X = X2.ravel()
        self.Y = Y2.ravel()
        self.wt = (self.wx[:, None] * self.wy[None, :]).ravel()
        self.wall_weight = self.Lx / self.quad_x

    @property
    def n_points(self) -> int:
        return self.quad_x * self.quad_y

    @property
    def area(self) -> float:
        return self.Lx * self.H

    def min_spacing(self) -> float:
        """Smallest collocation spacing, used by CFL checks."""
        hy = np.min(np.diff(np.concatenate(([0.0], self.y, [self.H]))))
        return min(self.Lx / self.quad_x, float(hy))

    def check_dealiasing(self, kx_max: int, ky_max: int, context: str = "") -> None:
        """Reject quadrature resolutions below the dealiasing margin.

        The grid must carry at least twice the highest retained mode index in
        each direction so that products of resolved fields are analyzed
        without aliasing.
        """
        tag = f" ({context})" if context else ""
        if self.quad_x < 2 * kx_max + 1:
            raise ConfigError(
                f"quad_x = {self.quad_x} is below the dealiasing margin "
                f"2*kx_max + 1 = {2 * kx_max + 1}{tag}"
            )
        if self.quad_y < 2 * ky_max + 1:
            raise ConfigError(
                f"quad_y = {self.quad_y} is below the dealiasing margin "
                f"2*ky_max + 1 = {2 * ky_max + 1}{tag}"
            )

    def integrate(self, values: np.ndarray) -> float:
        """Integrate a flat field over the channel."""
        return float(self.wt @ values)

    def meta(self) -> dict:
        return {
            "Lx": self.Lx,
            "H": self.H,
            "quad_x": self.quad_x,
            "quad_y": self.quad_y,
        }
