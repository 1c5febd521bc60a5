"""Deterministic on-disk run archives.

An archive directory holds everything needed to re-verify a run without
re-solving it:

    schema.json          archive format tag
    config.ini           the configuration, byte-for-byte as given
    times.npy            (K+1,) time nodes
    rho_coeffs.npy       (K+1, P, M) density coefficients
    u_coeffs.npy         (K+1, n) velocity coefficients
    provenance.json      solver iteration log, initial-data distances, params
    ledger.csv           energy ledger, one row per node
    verification.json    one entry per ResidualReport plus the pass verdict
    snapshots/           strided synthesized grid fields (rho, ux, uy)
    run.log              plain-text log (written by the CLI)

All writers are deterministic: identical inputs give byte-identical files
(sorted JSON keys, no timestamps, repr float formatting, one .npy per
array).  The verifier relies on this to certify that re-running the
diagnostics reproduces the archived reports exactly.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, render_config
from .diagnostics import LEDGER_COLUMNS, EnergyLedger, VerificationSuite
from .errors import ConfigError
from .momentum import Trajectory

SCHEMA = {"format": "slipflow-archive", "version": 1}


def _jsonify(obj):
    """Recursively convert numpy scalars/arrays for json serialization."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    text = json.dumps(_jsonify(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n")


def write_ledger_csv(path: Path, ledger: EnergyLedger) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LEDGER_COLUMNS)
    writer.writerows(ledger.as_rows())
    Path(path).write_text(buf.getvalue())


def write_verification(out_dir, suite: VerificationSuite) -> None:
    payload = {
        "passed": suite.passed,
        "reports": [r.as_dict() for r in suite.reports],
        "density_bounds": suite.bounds.as_dict(),
    }
    _write_json(Path(out_dir) / "verification.json", payload)
    write_ledger_csv(Path(out_dir) / "ledger.csv", suite.ledger)


def write_archive(out_dir, cfg: RunConfig, traj: Trajectory, info,
                  suite: VerificationSuite, regularization=None) -> Path:
    """Write a complete run archive; returns the directory path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "schema.json", SCHEMA | {"package": __version__})
    (out / "config.ini").write_text(cfg.raw_text or render_config(cfg))

    np.save(out / "times.npy", traj.times)
    np.save(out / "rho_coeffs.npy", traj.rho_coeffs)
    np.save(out / "u_coeffs.npy", traj.u_coeffs)

    provenance = {
        "solver": info.as_dict() if info is not None else None,
        "params": traj.params.as_dict(),
        "initial_data": regularization.as_dict() if regularization is not None else None,
    }
    _write_json(out / "provenance.json", provenance)
    write_verification(out, suite)

    K = traj.times.size - 1
    stride = cfg.stride if cfg.stride else K
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    for k in range(0, K + 1, stride):
        ux, uy = traj.basis.velocity(traj.u_coeffs[k])
        shape = (traj.space.geom.quad_x, traj.space.geom.quad_y)
        np.save(snap / f"rho_{k:06d}.npy",
                traj.space.synth(traj.rho_coeffs[k]).reshape(shape))
        np.save(snap / f"ux_{k:06d}.npy", ux.reshape(shape))
        np.save(snap / f"uy_{k:06d}.npy", uy.reshape(shape))
    return out


def load_archive(archive_dir) -> tuple:
    """Load (cfg, traj, provenance) back from an archive directory."""
    root = Path(archive_dir)
    if not (root / "schema.json").exists():
        raise ConfigError(f"{root} is not a run archive (no schema.json)")
    schema = json.loads((root / "schema.json").read_text())
    if schema.get("format") != SCHEMA["format"]:
        raise ConfigError(f"unrecognized archive format {schema.get('format')!r}")

    cfg = parse_config((root / "config.ini").read_text())
    space, basis, params = cfg.build()
    provenance = json.loads((root / "provenance.json").read_text()) \
        if (root / "provenance.json").exists() else {}
    traj = Trajectory(
        times=np.load(root / "times.npy"),
        rho_coeffs=np.load(root / "rho_coeffs.npy"),
        u_coeffs=np.load(root / "u_coeffs.npy"),
        space=space, basis=basis, params=params,
        provenance={"archive": str(root)},
    )
    return cfg, traj, provenance
