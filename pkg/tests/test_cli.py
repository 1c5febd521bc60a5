import hashlib
import json

import pytest

from slipflow.cli import build_parser, main

MMS_INI = """\
[geometry]
Lx = 1.0
H = 1.0

[params]
nu = 0.1
lambda = 0.05
a = 1.0
gamma = 1.6666666666666667
beta = 4.5
alpha = 1e-3
eps = 1e-2
delta = 5e-2

[mms]
t_end = 0.02
dt = 1e-3
dts = 4e-3, 2e-3
levels = 1:1, 2:2
"""


def dir_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parser_knows_all_verbs():
    parser = build_parser()
    args = parser.parse_args(["run", "--config", "a.ini", "--out", "d"])
    assert args.verb == "run"
    args = parser.parse_args(["sweep", "--config", "a.ini", "--param",
                              "delta", "--schedule", "0.1,0.05", "--out", "d"])
    assert args.schedule == "0.1,0.05"
    with pytest.raises(SystemExit):
        parser.parse_args(["sweep", "--config", "a.ini", "--param",
                           "viscosity", "--schedule", "1,2", "--out", "d"])
    with pytest.raises(SystemExit):
        parser.parse_args([])


def test_run_verb_archives_and_exits_zero(zerodata_text, tmp_path):
    cfg = write_config(tmp_path, zerodata_text)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "verification.json").is_file()
    log_text = (out / "run.log").read_text()
    assert "all" in log_text and "passed" in log_text
    # archives must not embed host paths
    assert str(tmp_path) not in log_text


def test_reruns_are_byte_identical(zerodata_text, tmp_path):
    cfg = write_config(tmp_path, zerodata_text)
    digests = []
    for sub in ("one", "two"):
        out = tmp_path / sub
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        digests.append(dir_digest(out))
    assert digests[0] == digests[1]


def test_verify_verb_re_checks_an_archive(zerodata_text, tmp_path):
    cfg = write_config(tmp_path, zerodata_text)
    out = tmp_path / "out"
    main(["run", "--config", str(cfg), "--out", str(out)])
    assert main(["verify", "--archive", str(out)]) == 0


def test_bad_config_exits_two(zerodata_text, tmp_path):
    bad = zerodata_text.replace("gamma = 1.6666666666666667", "gamma = 1.2")
    cfg = write_config(tmp_path, bad)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2


def test_failed_verification_exits_one_and_names_the_check(
        small_force_text, tmp_path):
    # a coarse forced run trips the sign checks; the log names the first
    coarse = small_force_text.replace("dt = 1e-4", "dt = 1e-3").replace(
        "fx = 0.001*sin", "fx = 0.4*sin").replace(
        "fy = 0.0005*cos", "fy = 0.1*cos")
    cfg = write_config(tmp_path, coarse)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 1
    log_text = (out / "run.log").read_text()
    assert "verification failed at" in log_text


def test_sweep_verb_writes_a_report(small_force_text, tmp_path):
    cfg = write_config(tmp_path, small_force_text)
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", str(cfg), "--param", "delta",
               "--schedule", "5e-2,2.5e-2", "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "sweep_report.json").read_text())
    assert report["parameter"] == "delta"
    assert report["aborted"] is False
    assert len(report["levels"]) == 2
    assert all(lvl["passed"] for lvl in report["levels"])
    assert (out / "delta_00" / "verification.json").is_file()
    assert (out / "delta_01" / "verification.json").is_file()


def test_mms_verb_writes_a_report(tmp_path):
    cfg = write_config(tmp_path, MMS_INI, name="mms.ini")
    out = tmp_path / "mms"
    rc = main(["mms", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "mms_report.json").read_text())
    assert report["passed"] is True
    assert report["dt_study"]["order"] >= 1.8
