"""Run orchestration: config -> solve -> verify -> archive.

This is the layer the command-line verbs call into.  It owns no numerics of
its own; it wires together initial-data regularization, the fixed-point
solver, the diagnostics suite, and the archive writer, and it defines the
config-driven manufactured-solution study.
"""

import configparser
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .archive import load_archive, write_archive, write_verification
from .config import RunConfig, load_config
from .diagnostics import VerificationSuite, verification_suite
from .errors import ConfigError
from .geometry import Geometry
from .initialdata import RegularizedInitialData, regularize_initial_data
from .mms import (
    constant_pair,
    manufactured_solution_residual,
    mms_dt_study,
    mms_resolution_study,
    polynomial_pair,
    smooth_pair,
)
from .momentum import FixedPointInfo, FluidParams, Trajectory, fixed_point_solve

log = logging.getLogger("slipflow")


@dataclass
class RunResult:
    """Everything a finished run produced, still in memory."""

    config: RunConfig
    trajectory: Trajectory
    solver_info: FixedPointInfo
    suite: VerificationSuite
    regularization: RegularizedInitialData
    archive_dir: Optional[Path]

    @property
    def passed(self) -> bool:
        return self.suite.passed


def run_simulation(cfg: RunConfig, out_dir=None, base_dir=None,
                   tols: Optional[dict] = None) -> RunResult:
    """Execute a configured run end to end.

    Args:
        cfg: validated configuration.
        out_dir: archive directory; None skips archiving (used by sweeps
            that only need the in-memory result).
        base_dir: directory file references in the config resolve against.
        tols: keyword overrides forwarded to the verification suite.

    Returns:
        RunResult; inspect ``.passed`` / ``.suite.failures()`` for the
        verdict.  Solver non-convergence raises, it is not a report.
    """
    cfg.validate()
    space, basis, params = cfg.build()
    log.info("run: %d velocity modes, %d density coefficients, K = %d steps",
             basis.n, space.P * space.M, cfg.steps)

    rho0_raw, q_raw = cfg.initial_fields(space.geom, base_dir)
    reg = regularize_initial_data(rho0_raw, q_raw, space, basis, params)
    log.info("initial data: L^gamma distance %.3e, L^1 momentum distance %.3e,"
             " clamp moved %.1f%% of points", reg.l_gamma_distance,
             reg.l1_momentum_distance, 100.0 * reg.clamp_fraction)

    traj, info = fixed_point_solve(
        space, basis, params, reg.rho0_coeffs, reg.u0, cfg.t_end, cfg.dt,
        tol_fp=cfg.tol_fp, max_iter=cfg.max_iter, damping=cfg.damping,
        coupling=cfg.coupling)
    log.info("solver: converged = %s after %d iterations, final update %.3e",
             info.converged, len(info.iterations), info.final_residual)

    suite = verification_suite(
        traj, q=reg.q_grid, rho0_coeffs=reg.rho0_coeffs, seed=cfg.seed,
        battery_size=cfg.battery, interior_size=cfg.interior,
        **(tols or {}))
    for line in suite.summary_lines():
        log.info("%s", line)

    archive_dir = None
    if out_dir is not None:
        # the destination path stays out of the log: archives of identical
        # configs are byte-identical, wherever they land
        archive_dir = write_archive(out_dir, cfg, traj, info, suite, reg)
        log.info("archive written")
    return RunResult(cfg, traj, info, suite, reg, archive_dir)


def run_from_file(config_path, out_dir=None, tols: Optional[dict] = None) -> RunResult:
    cfg = load_config(config_path)
    return run_simulation(cfg, out_dir=out_dir,
                          base_dir=Path(config_path).parent, tols=tols)


def verify_archive(archive_dir, tols: Optional[dict] = None) -> VerificationSuite:
    """Re-run the diagnostics suite on an existing archive.

    The verifier is pure: identical archives yield byte-identical
    verification files.  The regularized initial data is recomputed from the
    archived config so the initial-condition checks run too.
    """
    cfg, traj, _ = load_archive(archive_dir)
    space, basis, params = traj.space, traj.basis, traj.params
    rho0_raw, q_raw = cfg.initial_fields(space.geom, Path(archive_dir))
    reg = regularize_initial_data(rho0_raw, q_raw, space, basis, params)
    suite = verification_suite(
        traj, q=reg.q_grid, rho0_coeffs=reg.rho0_coeffs, seed=cfg.seed,
        battery_size=cfg.battery, interior_size=cfg.interior,
        **(tols or {}))
    write_verification(archive_dir, suite)
    for line in suite.summary_lines():
        log.info("%s", line)
    return suite


# ----------------------------------------------------------------------
# manufactured-solution study driven by a config file
# ----------------------------------------------------------------------

_PAIRS = {
    "constant": constant_pair,
    "polynomial": polynomial_pair,
    "smooth": smooth_pair,
}

_MMS_KEYS = {
    "geometry": {"lx", "h"},
    "params": {"nu", "lambda", "a", "gamma", "beta", "alpha", "eps", "delta"},
    "mms": {"pair", "dt_pair", "resolution_pair", "kx_max", "ky_max",
            "quad_x", "quad_y", "t_end", "dt", "dts", "levels", "min_order",
            "max_slope"},
}


def parse_mms_config(text: str) -> dict:
    """Parse a manufactured-solution study description.

    Sections [geometry] and [params] as in a run config (no force, no
    friction thresholds: manufactured runs are frictionless by
    construction); section [mms] names the pairs and the study grids:

        dt_pair         = polynomial | smooth | constant  (default polynomial)
        resolution_pair = polynomial | smooth | constant  (default smooth)
        pair            = shorthand that sets both at once
        dts             = comma-separated step sizes, temporal-order study
        levels          = comma-separated kx:ky cutoffs, spectral study

    The defaults differ on purpose: the temporal study needs a pair the
    velocity space represents exactly (otherwise the spatial floor hides
    the dt dependence), while the spectral study needs one it does not.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse config: {exc}") from None
    for section in ("geometry", "params", "mms"):
        if not cp.has_section(section):
            raise ConfigError(f"mms config is missing required section [{section}]")
    for section in cp.sections():
        if section not in _MMS_KEYS:
            raise ConfigError(f"mms config has an unknown section [{section}]")
        unknown = set(cp.options(section)) - _MMS_KEYS[section]
        if unknown:
            raise ConfigError(f"mms config section [{section}] has unknown "
                              f"keys: {', '.join(sorted(unknown))}")

    shorthand = cp.get("mms", "pair", fallback=None)
    dt_pair = cp.get("mms", "dt_pair", fallback=shorthand or "polynomial")
    res_pair = cp.get("mms", "resolution_pair", fallback=shorthand or "smooth")
    for name in (dt_pair, res_pair):
        if name not in _PAIRS:
            raise ConfigError(f"unknown manufactured pair '{name}' "
                              f"(choose from {sorted(_PAIRS)})")
    getf = cp.getfloat
    out = {
        "Lx": getf("geometry", "lx"),
        "H": getf("geometry", "h"),
        "dt_pair": dt_pair,
        "resolution_pair": res_pair,
        "kx_max": cp.getint("mms", "kx_max", fallback=1),
        "ky_max": cp.getint("mms", "ky_max", fallback=1),
        "quad_x": cp.getint("mms", "quad_x", fallback=24),
        "quad_y": cp.getint("mms", "quad_y", fallback=24),
        "t_end": getf("mms", "t_end", fallback=0.04),
        "dt": getf("mms", "dt", fallback=1e-3),
        "dts": [float(v) for v in
                cp.get("mms", "dts", fallback="4e-3, 2e-3, 1e-3").split(",")],
        "levels": [tuple(int(p) for p in lvl.split(":"))
                   for lvl in cp.get("mms", "levels",
                                     fallback="1:1, 2:2, 4:4").replace(" ", "").split(",")],
        "min_order": getf("mms", "min_order", fallback=1.8),
        "max_slope": getf("mms", "max_slope", fallback=-3.0),
        "params": FluidParams(
            nu=getf("params", "nu"), lam=getf("params", "lambda"),
            a=getf("params", "a"), gamma=getf("params", "gamma"),
            beta=getf("params", "beta"), alpha=getf("params", "alpha"),
            eps=getf("params", "eps"), delta=getf("params", "delta"),
            g=(0.0, 0.0), f=None),
    }
    for lvl in out["levels"]:
        if len(lvl) != 2:
            raise ConfigError("mms levels must be kx:ky pairs, e.g. '1:1, 2:2'")
    return out


def run_mms_study(spec: dict) -> dict:
    """Run the temporal and spectral studies described by an mms config."""
    dt_pair = _PAIRS[spec["dt_pair"]](spec["Lx"], spec["H"])
    res_pair = _PAIRS[spec["resolution_pair"]](spec["Lx"], spec["H"])
    geom = Geometry(spec["Lx"], spec["H"], spec["quad_x"], spec["quad_y"])
    params = spec["params"]

    log.info("mms: pair '%s', dt study over %s", dt_pair.name, spec["dts"])
    dt_study = mms_dt_study(dt_pair, geom, spec["kx_max"], spec["ky_max"],
                            params, spec["t_end"], spec["dts"])
    log.info("mms: fitted temporal order %.3f", dt_study["order"])

    log.info("mms: pair '%s', resolution study over levels %s",
             res_pair.name, spec["levels"])
    res_study = mms_resolution_study(res_pair, params, spec["t_end"],
                                     spec["dt"], spec["levels"],
                                     quad=max(spec["quad_x"], spec["quad_y"]))
    log.info("mms: spectral slopes per doubling %s",
             ["%.2f" % s for s in res_study["slopes_per_doubling"]])

    passed = (dt_study["order"] >= spec["min_order"]
              and all(s <= spec["max_slope"]
                      for s in res_study["slopes_per_doubling"]))
    return {
        "dt_pair": dt_pair.name,
        "resolution_pair": res_pair.name,
        "passed": passed,
        "min_order": spec["min_order"],
        "max_slope": spec["max_slope"],
        "dt_study": {
            "dts": list(dt_study["dts"]),
            "errors": list(dt_study["errors"]),
            "order": dt_study["order"],
            "pairwise_orders": list(dt_study["pairwise_orders"]),
        },
        "resolution_study": {
            "levels": [list(l) for l in res_study["levels"]],
            "errors": list(res_study["errors"]),
            "slopes_per_doubling": list(res_study["slopes_per_doubling"]),
        },
    }
