"""Command-line entry points.

Verbs:
    run    --config FILE --out DIR      solve + verify + archive
    verify --archive DIR                re-run diagnostics on an archive
    sweep  --config FILE --param P --schedule CSV --out DIR
    mms    --config FILE [--out DIR]    manufactured-solution study

Exit status: 0 when every check passes, 1 when any fails or the solver
stops, 2 for configuration errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .archive import _jsonify
from .errors import ConfigError, ConvergenceError, PositivityError, StepSizeError
from .harness import parse_mms_config, run_from_file, run_mms_study, verify_archive
from .sweep import SWEEP_PARAMETERS, run_sweep

log = logging.getLogger("slipflow")


def _setup_logging(verbosity: int, logfile=None) -> None:
    level = logging.DEBUG if verbosity else logging.INFO
    log.setLevel(level)
    for handler in log.handlers:
        handler.close()
    log.handlers.clear()
    console = logging.StreamHandler()
    console.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(console)
    if logfile is not None:
        # no timestamps: archives must be byte-identical across reruns
        handler = logging.FileHandler(logfile, mode="w")
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slipflow",
        description="Spectral solver and verification harness for "
                    "compressible channel flow with friction-limited slip.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="solve, verify, and archive a run")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)

    p_ver = sub.add_parser("verify", help="re-run diagnostics on an archive")
    p_ver.add_argument("--archive", required=True)

    p_sw = sub.add_parser("sweep", help="sweep one regularization parameter")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p_sw.add_argument("--schedule", required=True,
                      help="comma-separated level values, e.g. 0.1,0.05,0.025")
    p_sw.add_argument("--out", required=True)
    p_sw.add_argument("--workers", type=int, default=1)

    p_mms = sub.add_parser("mms", help="manufactured-solution study")
    p_mms.add_argument("--config", required=True)
    p_mms.add_argument("--out", default=None)
    return parser


def _cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _setup_logging(args.verbose, out / "run.log")
    result = run_from_file(args.config, out_dir=out)
    if result.passed:
        log.info("verification: all %d checks passed", len(result.suite.reports))
        return 0
    first = result.suite.failures()[0]
    log.error("verification failed at %s (value %.6e > tolerance %.6e)",
              first.name, first.value, first.tolerance)
    return 1


def _cmd_verify(args) -> int:
    _setup_logging(args.verbose)
    suite = verify_archive(args.archive)
    if suite.passed:
        log.info("verification: all %d checks passed", len(suite.reports))
        return 0
    first = suite.failures()[0]
    log.error("verification failed at %s (value %.6e > tolerance %.6e)",
              first.name, first.value, first.tolerance)
    return 1


def _cmd_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _setup_logging(args.verbose, out / "sweep.log")
    from .config import load_config
    cfg = load_config(args.config)
    schedule = [v for v in args.schedule.split(",") if v.strip()]
    report = run_sweep(cfg, args.param, schedule, out_dir=out,
                       workers=args.workers)
    payload = json.dumps(_jsonify(report.as_dict()), indent=2, sort_keys=True)
    (out / "sweep_report.json").write_text(payload + "\n")
    log.info("sweep report written to %s", out / "sweep_report.json")
    if report.aborted:
        log.error("sweep aborted at level %s", report.failed_level)
        return 1
    return 0


def _cmd_mms(args) -> int:
    _setup_logging(args.verbose)
    spec = parse_mms_config(Path(args.config).read_text())
    report = run_mms_study(spec)
    payload = json.dumps(_jsonify(report), indent=2, sort_keys=True)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mms_report.json").write_text(payload + "\n")
        log.info("mms report written to %s", out / "mms_report.json")
    else:
        print(payload)
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "verify": _cmd_verify,
               "sweep": _cmd_sweep, "mms": _cmd_mms}[args.verb]
    try:
        return handler(args)
    except ConfigError as exc:
        log.error("configuration rejected: %s", exc)
        return 2
    except (ConvergenceError, PositivityError, StepSizeError) as exc:
        log.error("solver stopped: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
