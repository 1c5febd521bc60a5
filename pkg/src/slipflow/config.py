"""Run configuration: flat sectioned key-value files and their gates.

A run is described by an INI-style text file with the sections

    [geometry]        Lx, H
    [discretization]  kx_max, ky_max, quad_x, quad_y, dt, t_end
    [params]          nu, lambda, a, gamma, beta, alpha, eps, delta,
                      g0, g1, and optional force expressions fx, fy
    [solver]          tol_fp, max_iter, damping, coupling
    [initial_data]    rho0, qx, qy expressions, or rho0_file / q_file
    [output]          stride
    [verification]    seed, battery, interior

Field expressions use the grammar of :mod:`slipflow.expressions`.  Every
rejected configuration names the violated condition; nothing is silently
defaulted except the optional [solver], [output] and [verification] keys.
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import build_velocity_basis
from .errors import ConfigError
from .expressions import compile_field
from .geometry import Geometry
from .momentum import FluidParams, ForceField
from .spectral import ScalarSpace

_KNOWN_KEYS = {
    "geometry": {"lx", "h"},
    "discretization": {"kx_max", "ky_max", "quad_x", "quad_y", "dt", "t_end"},
    "params": {"nu", "lambda", "a", "gamma", "beta", "alpha", "eps", "delta",
               "g0", "g1", "fx", "fy"},
    "solver": {"tol_fp", "max_iter", "damping", "coupling"},
    "initial_data": {"rho0", "qx", "qy", "rho0_file", "q_file"},
    "output": {"stride"},
    "verification": {"seed", "battery", "interior"},
}
_REQUIRED_SECTIONS = ("geometry", "discretization", "params", "initial_data")


@dataclass
class RunConfig:
    """Validated run description; see the module docstring for the format."""

    Lx: float
    H: float
    kx_max: int
    ky_max: int
    quad_x: int
    quad_y: int
    dt: float
    t_end: float
    nu: float
    lam: float
    a: float
    gamma: float
    beta: float
    alpha: float
    eps: float
    delta: float
    g: tuple
    fx: Optional[str] = None
    fy: Optional[str] = None
    tol_fp: float = 1e-9
    max_iter: int = 50
    damping: float = 0.7
    coupling: str = "trajectory"
    rho0: Optional[str] = None
    qx: Optional[str] = None
    qy: Optional[str] = None
    rho0_file: Optional[str] = None
    q_file: Optional[str] = None
    stride: int = 0  # 0 = only the first and last snapshot
    seed: int = 0
    battery: int = 100
    interior: int = 50
    raw_text: str = field(default="", repr=False)

    # ------------------------------------------------------------------

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def validate(self) -> None:
        """Check every gate; raises ConfigError naming the failed condition."""
        K = self.steps
        if self.dt <= 0 or self.t_end <= 0:
            raise ConfigError(
                f"time grid requires dt > 0 and t_end > 0 "
                f"(got dt = {self.dt}, t_end = {self.t_end})")
        if K < 1 or abs(K * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ConfigError(
                f"t_end / dt = {self.t_end / self.dt} must be an integer "
                f"number of steps")
        stride = self.stride if self.stride else K
        if K % stride != 0:
            raise ConfigError(
                f"snapshot stride {stride} does not divide the step count {K}")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError(f"damping must lie in (0, 1] (got {self.damping})")
        if self.tol_fp <= 0:
            raise ConfigError(f"tol_fp must be positive (got {self.tol_fp})")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1 (got {self.max_iter})")
        if self.coupling not in ("trajectory", "step_local"):
            raise ConfigError(
                f"unknown coupling mode '{self.coupling}' "
                f"(choose 'trajectory' or 'step_local')")
        if self.battery < 1 or self.interior < 1:
            raise ConfigError("battery sizes must be at least 1")
        if (self.rho0 is None) == (self.rho0_file is None):
            raise ConfigError(
                "initial density needs exactly one of rho0 (expression) "
                "or rho0_file")
        have_expr = self.qx is not None and self.qy is not None
        if have_expr == (self.q_file is not None) or \
                (self.qx is None) != (self.qy is None):
            raise ConfigError(
                "initial momentum needs either both qx and qy expressions "
                "or a q_file, not a mixture")
        # Geometry, dealiasing and parameter gates raise with their own
        # messages; the density space carries doubled cutoffs.
        geom = Geometry(self.Lx, self.H, self.quad_x, self.quad_y)
        geom.check_dealiasing(2 * self.kx_max, 2 * self.ky_max,
                              context="density space")
        self.fluid_params().validate()

    # ------------------------------------------------------------------

    def geometry(self) -> Geometry:
        return Geometry(self.Lx, self.H, self.quad_x, self.quad_y)

    def fluid_params(self, geom: Optional[Geometry] = None) -> FluidParams:
        """FluidParams with the force expressions evaluated on the grid."""
        f = None
        if self.fx is not None or self.fy is not None:
            if geom is None:
                geom = self.geometry()
            fx = compile_field(self.fx or "0")(geom.X, geom.Y)
            fy = compile_field(self.fy or "0")(geom.X, geom.Y)
            f = ForceField.constant(
                fx, fy, description=f"fx = {self.fx or '0'}; fy = {self.fy or '0'}")
        return FluidParams(nu=self.nu, lam=self.lam, a=self.a, gamma=self.gamma,
                           beta=self.beta, alpha=self.alpha, eps=self.eps,
                           delta=self.delta, g=self.g, f=f)

    def build(self):
        """Construct (space, basis, params) for this configuration."""
        geom = self.geometry()
        space = ScalarSpace(geom, 2 * self.kx_max, 2 * self.ky_max)
        basis = build_velocity_basis(geom, self.kx_max, self.ky_max)
        return space, basis, self.fluid_params(geom)

    def initial_fields(self, geom: Geometry, base_dir: Optional[Path] = None):
        """Raw initial fields (rho0_raw, q_raw) on the quadrature grid."""
        base = Path(base_dir) if base_dir is not None else Path(".")
        if self.rho0 is not None:
            rho0 = compile_field(self.rho0)(geom.X, geom.Y)
        else:
            rho0 = _load_grid(base / self.rho0_file, geom, "rho0_file")
        if self.qx is not None:
            q = np.stack([compile_field(self.qx)(geom.X, geom.Y),
                          compile_field(self.qy)(geom.X, geom.Y)])
        else:
            q = _load_grid(base / self.q_file, geom, "q_file", components=2)
        return rho0, q

    def replace(self, **updates) -> "RunConfig":
        """A copy with some fields overridden (sweep levels use this)."""
        from dataclasses import replace as dc_replace
        return dc_replace(self, **updates)

    def as_dict(self) -> dict:
        return {
            "geometry": {"Lx": self.Lx, "H": self.H},
            "discretization": {"kx_max": self.kx_max, "ky_max": self.ky_max,
                               "quad_x": self.quad_x, "quad_y": self.quad_y,
                               "dt": self.dt, "t_end": self.t_end},
            "params": {"nu": self.nu, "lambda": self.lam, "a": self.a,
                       "gamma": self.gamma, "beta": self.beta,
                       "alpha": self.alpha, "eps": self.eps,
                       "delta": self.delta, "g": list(self.g),
                       "fx": self.fx, "fy": self.fy},
            "solver": {"tol_fp": self.tol_fp, "max_iter": self.max_iter,
                       "damping": self.damping, "coupling": self.coupling},
            "initial_data": {"rho0": self.rho0, "qx": self.qx, "qy": self.qy,
                             "rho0_file": self.rho0_file, "q_file": self.q_file},
            "output": {"stride": self.stride},
            "verification": {"seed": self.seed, "battery": self.battery,
                             "interior": self.interior},
        }


def _load_grid(path: Path, geom: Geometry, label: str,
               components: int = 1) -> np.ndarray:
    if not path.exists():
        raise ConfigError(f"{label} points at a missing file: {path}")
    arr = np.asarray(np.load(path), dtype=float)
    want = (components, geom.quad_x, geom.quad_y) if components > 1 \
        else (geom.quad_x, geom.quad_y)
    flat = (components, geom.n_points) if components > 1 else (geom.n_points,)
    if arr.shape == want:
        arr = arr.reshape(flat)
    if arr.shape != flat:
        raise ConfigError(
            f"{label} has shape {arr.shape}; expected {want} or {flat} "
            f"for this quadrature grid")
    return arr


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------

def _get(cp, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"config is missing required key "
                              f"[{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(
            f"config key [{section}] {key} = {raw!r} is not a valid "
            f"{conv.__name__}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config given as text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse config: {exc}") from None

    for section in _REQUIRED_SECTIONS:
        if not cp.has_section(section):
            raise ConfigError(f"config is missing required section [{section}]")
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"config has an unknown section [{section}]")
        unknown = set(cp.options(section)) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(
                f"config section [{section}] has unknown keys: "
                f"{', '.join(sorted(unknown))}")

    cfg = RunConfig(
        Lx=_get(cp, "geometry", "lx", float, required=True),
        H=_get(cp, "geometry", "h", float, required=True),
        kx_max=_get(cp, "discretization", "kx_max", int, required=True),
        ky_max=_get(cp, "discretization", "ky_max", int, required=True),
        quad_x=_get(cp, "discretization", "quad_x", int, required=True),
        quad_y=_get(cp, "discretization", "quad_y", int, required=True),
        dt=_get(cp, "discretization", "dt", float, required=True),
        t_end=_get(cp, "discretization", "t_end", float, required=True),
        nu=_get(cp, "params", "nu", float, required=True),
        lam=_get(cp, "params", "lambda", float, required=True),
        a=_get(cp, "params", "a", float, required=True),
        gamma=_get(cp, "params", "gamma", float, required=True),
        beta=_get(cp, "params", "beta", float, required=True),
        alpha=_get(cp, "params", "alpha", float, required=True),
        eps=_get(cp, "params", "eps", float, required=True),
        delta=_get(cp, "params", "delta", float, required=True),
        g=(_get(cp, "params", "g0", float, required=True),
           _get(cp, "params", "g1", float, required=True)),
        fx=_get(cp, "params", "fx", str),
        fy=_get(cp, "params", "fy", str),
        tol_fp=_get(cp, "solver", "tol_fp", float, 1e-9),
        max_iter=_get(cp, "solver", "max_iter", int, 50),
        damping=_get(cp, "solver", "damping", float, 0.7),
        coupling=_get(cp, "solver", "coupling", str, "trajectory"),
        rho0=_get(cp, "initial_data", "rho0", str),
        qx=_get(cp, "initial_data", "qx", str),
        qy=_get(cp, "initial_data", "qy", str),
        rho0_file=_get(cp, "initial_data", "rho0_file", str),
        q_file=_get(cp, "initial_data", "q_file", str),
        stride=_get(cp, "output", "stride", int, 0),
        seed=_get(cp, "verification", "seed", int, 0),
        battery=_get(cp, "verification", "battery", int, 100),
        interior=_get(cp, "verification", "interior", int, 50),
        raw_text=text,
    )
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    """Parse and validate a config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def render_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig back to config text.

    Used when a sweep derives per-level configs from a base config; the
    rendered text round-trips through :func:`parse_config`.
    """
    blocks = cfg.as_dict()
    key_names = {"Lx": "Lx", "H": "H"}
    lines = []
    for section, entries in blocks.items():
        body = []
        for key, value in entries.items():
            if value is None:
                continue
            if key == "g":
                body.append(f"g0 = {value[0]!r}")
                body.append(f"g1 = {value[1]!r}")
                continue
            name = key_names.get(key, key)
            body.append(f"{name} = {value!r}" if isinstance(value, float)
                        else f"{name} = {value}")
        if body:
            lines.append(f"[{section}]")
            lines.extend(body)
            lines.append("")
    return "\n".join(lines)
