"""Parameter sweeps toward the vanishing-regularization limits.

The approximation scheme carries four knobs that are sent to their limits
one at a time: the friction smoothing delta, the Galerkin dimension n, the
density diffusion eps, and the artificial pressure alpha.  A sweep freezes
everything else, runs each level through the full solve-and-verify
pipeline, and measures how consecutive solutions approach each other in
L2 of space-time (Cauchy-like behavior is the observable stand-in for
convergence).  Per-parameter trend flags capture what each limit is
expected to improve.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .errors import (
    ConfigError,
    ConvergenceError,
    PositivityError,
    StepSizeError,
)
from .harness import RunResult, run_simulation
from .momentum import Trajectory

log = logging.getLogger("slipflow")

SWEEP_PARAMETERS = ("delta", "n", "eps", "alpha")
_DECREASING = {"delta": True, "eps": True, "alpha": True, "n": False}


@dataclass
class SweepReport:
    """Outcome of one parameter sweep."""

    parameter: str
    schedule: list
    levels: list = field(default_factory=list)      # summary dict per level
    distance_rho: list = field(default_factory=list)
    distance_u: list = field(default_factory=list)
    monotone: dict = field(default_factory=dict)
    aborted: bool = False
    failed_level: Optional[int] = None

    @property
    def distances_decreasing(self) -> Optional[bool]:
        if len(self.distance_rho) < 2:
            return None
        return bool(
            np.all(np.diff(self.distance_rho) < 0)
            and np.all(np.diff(self.distance_u) < 0))

    def as_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "schedule": list(self.schedule),
            "levels": self.levels,
            "distance_rho": self.distance_rho,
            "distance_u": self.distance_u,
            "distances_decreasing": self.distances_decreasing,
            "monotone": self.monotone,
            "aborted": self.aborted,
            "failed_level": self.failed_level,
        }


def level_config(cfg: RunConfig, parameter: str, value) -> RunConfig:
    """The base config with one sweep parameter replaced."""
    if parameter == "delta":
        return cfg.replace(delta=float(value), raw_text="")
    if parameter == "eps":
        return cfg.replace(eps=float(value), raw_text="")
    if parameter == "alpha":
        return cfg.replace(alpha=float(value), raw_text="")
    if parameter == "n":
        return cfg.replace(kx_max=int(value), ky_max=int(value), raw_text="")
    raise ConfigError(
        f"unknown sweep parameter '{parameter}' (choose from {SWEEP_PARAMETERS})")


def check_schedule(parameter: str, schedule) -> list:
    """Gate the schedule direction; returns the values as a list."""
    values = [int(v) if parameter == "n" else float(v) for v in schedule]
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two schedule levels")
    diffs = np.diff(values)
    if _DECREASING[parameter]:
        if not np.all(diffs < 0):
            raise ConfigError(
                f"a {parameter} sweep must be strictly decreasing toward the "
                f"limit (got {values})")
    elif not np.all(diffs > 0):
        raise ConfigError(
            f"an n sweep must be strictly increasing toward the limit "
            f"(got {values})")
    return values


def trajectory_distance(a: Trajectory, b: Trajectory) -> tuple:
    """L2(space-time) distances (rho, u) between two runs.

    The trajectories may use different mode cutoffs but must share the
    quadrature grid and the time grid; both are synthesized pointwise and
    compared there (the finest common grid).  The distance is symmetric by
    construction.
    """
    if a.times.size != b.times.size or abs(a.dt - b.dt) > 1e-12 * a.dt:
        raise ConfigError("trajectory distance requires a common time grid")
    geom = a.space.geom
    if geom.n_points != b.space.geom.n_points:
        raise ConfigError("trajectory distance requires a common quadrature grid")
    wt = geom.wt
    K = a.times.size - 1
    tw = np.full(K + 1, a.dt)
    tw[0] = tw[-1] = 0.5 * a.dt
    acc_rho = 0.0
    acc_u = 0.0
    for k in range(K + 1):
        dr = a.space.synth(a.rho_coeffs[k]) - b.space.synth(b.rho_coeffs[k])
        ax, ay = a.basis.velocity(a.u_coeffs[k])
        bx, by = b.basis.velocity(b.u_coeffs[k])
        acc_rho += tw[k] * float(wt @ (dr * dr))
        acc_u += tw[k] * float(wt @ ((ax - bx) ** 2 + (ay - by) ** 2))
    return float(np.sqrt(acc_rho)), float(np.sqrt(acc_u))


def _report_value(result: RunResult, name: str) -> Optional[float]:
    for r in result.suite.reports:
        if r.name == name:
            return r.value
    return None


def _level_summary(result: RunResult, parameter: str, value) -> dict:
    ledger = result.suite.ledger
    defects = [v for w in (0, 1)
               if (v := _report_value(result, f"complementarity_defect[wall{w}]"))
               is not None]
    return {
        "parameter": parameter,
        "value": value,
        "passed": result.passed,
        "failures": [r.name for r in result.suite.failures()],
        "energy_residual": ledger.max_relative_residual,
        "boundary_dissipation_gap": _report_value(result, "boundary_dissipation_gap"),
        "complementarity_defect": max(defects) if defects else None,
        "artificial_potential_final": float(ledger.potential_beta[-1]),
        "l_gamma_distance": result.regularization.l_gamma_distance,
        "l1_momentum_distance": result.regularization.l1_momentum_distance,
        # directory name only, so reports compare across output locations
        "archive": result.archive_dir.name if result.archive_dir else None,
    }


def _failed_summary(parameter: str, value, exc: Exception) -> dict:
    """Placeholder summary for a level whose solve raised."""
    return {
        "parameter": parameter, "value": value, "passed": False,
        "failures": [], "error": f"{type(exc).__name__}: {exc}",
        "energy_residual": None, "boundary_dissipation_gap": None,
        "complementarity_defect": None, "artificial_potential_final": None,
        "l_gamma_distance": None, "l1_momentum_distance": None,
        "archive": None,
    }


_HARD_FAILURES = (ConvergenceError, PositivityError, StepSizeError)


def _run_level(args) -> dict:
    """Worker entry: run one level and return its summary (picklable)."""
    cfg, parameter, value, out_dir, tols = args
    try:
        result = run_simulation(cfg, out_dir=out_dir, tols=tols)
    except _HARD_FAILURES as exc:
        return _failed_summary(parameter, value, exc)
    return _level_summary(result, parameter, value)


def _trend_flags(parameter: str, report: SweepReport, values: list) -> dict:
    flags = {}
    levels = report.levels
    if parameter == "alpha":
        pots = [lv["artificial_potential_final"] for lv in levels]
        dists_g = [lv["l_gamma_distance"] for lv in levels]
        dists_q = [lv["l1_momentum_distance"] for lv in levels]
        flags["artificial_potential_decreasing"] = bool(
            np.all(np.diff(pots) < 0))
        flags["regularization_distances_decreasing"] = bool(
            np.all(np.diff(dists_g) < 0) and np.all(np.diff(dists_q) <= 0))
    if parameter == "delta":
        defects = [lv["complementarity_defect"] for lv in levels]
        # at-least-linear decay: defect(delta) stays below the line through
        # the coarsest level's defect, with 5% slack for measurement noise
        base = defects[0] / values[0]
        flags["defect_linear_in_delta"] = bool(
            all(d <= 1.05 * base * v for d, v in zip(defects, values)))
        flags["dissipation_gap_within_bound"] = bool(
            all("boundary_dissipation_gap" not in lv["failures"] for lv in levels))
    return flags


def run_sweep(cfg: RunConfig, parameter: str, schedule, out_dir=None,
              workers: int = 1, tols: Optional[dict] = None) -> SweepReport:
    """Run one sweep; aborts (with partial report) on a hard level failure.

    Args:
        cfg: base configuration; the swept parameter is overridden per level.
        parameter: one of delta, n, eps, alpha.
        schedule: strictly monotone level values (decreasing except for n).
        out_dir: per-level archives land in ``<out_dir>/<parameter>_<i>``;
            None disables archiving (distances are then computed from the
            in-memory trajectories).
        workers: independent levels may run in parallel processes.
    """
    values = check_schedule(parameter, schedule)
    report = SweepReport(parameter=parameter, schedule=values)
    configs = [level_config(cfg, parameter, v) for v in values]
    for level_cfg in configs:
        level_cfg.validate()
    dirs = [Path(out_dir) / f"{parameter}_{i:02d}" if out_dir is not None else None
            for i in range(len(values))]

    trajectories = []
    if workers > 1 and out_dir is not None:
        # parallel levels write their archives; trajectories reload lazily
        jobs = [(c, parameter, v, d, tols)
                for c, v, d in zip(configs, values, dirs)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_level, jobs))
        from .archive import load_archive
        for i, summary in enumerate(summaries):
            report.levels.append(summary)
            if summary.get("error") is None:
                trajectories.append(load_archive(dirs[i])[1])
            if not summary["passed"]:
                report.aborted = True
                report.failed_level = i
                break
    else:
        for i, (level_cfg, value) in enumerate(zip(configs, values)):
            log.info("sweep level %d/%d: %s = %s", i + 1, len(values),
                     parameter, value)
            try:
                result = run_simulation(level_cfg, out_dir=dirs[i], tols=tols)
            except _HARD_FAILURES as exc:
                log.error("sweep aborted: level %d raised %s", i, exc)
                report.levels.append(_failed_summary(parameter, value, exc))
                report.aborted = True
                report.failed_level = i
                break
            report.levels.append(_level_summary(result, parameter, value))
            trajectories.append(result.trajectory)
            if not result.passed:
                log.warning("sweep aborted: level %d failed %s", i,
                            [r.name for r in result.suite.failures()])
                report.aborted = True
                report.failed_level = i
                break

    for a, b in zip(trajectories[:-1], trajectories[1:]):
        d_rho, d_u = trajectory_distance(a, b)
        report.distance_rho.append(d_rho)
        report.distance_u.append(d_u)
    if not report.aborted:
        report.monotone = _trend_flags(parameter, report, values)
    return report
