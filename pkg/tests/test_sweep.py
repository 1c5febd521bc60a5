import pytest

from slipflow import ConfigError, parse_config, run_simulation, run_sweep
from slipflow.sweep import check_schedule, level_config, trajectory_distance


def test_schedule_gates_are_named():
    with pytest.raises(ConfigError, match="at least two"):
        check_schedule("delta", [0.1])
    with pytest.raises(ConfigError, match="strictly decreasing"):
        check_schedule("delta", [0.05, 0.1])
    with pytest.raises(ConfigError, match="strictly increasing"):
        check_schedule("n", [4, 2])
    assert check_schedule("n", ["2", "4"]) == [2, 4]
    assert check_schedule("eps", ["1e-2", "5e-3"]) == [1e-2, 5e-3]


def test_level_config_overrides_one_knob(zerodata_text):
    cfg = parse_config(zerodata_text)
    lv = level_config(cfg, "delta", 0.025)
    assert lv.delta == 0.025
    assert lv.eps == cfg.eps
    # n controls both cutoffs at once
    ln = level_config(cfg, "n", 3)
    assert ln.kx_max == 3 and ln.ky_max == 3
    # the stored text no longer describes the level, so it is dropped
    assert lv.raw_text == ""


@pytest.fixture(scope="module")
def two_runs(zerodata_text, small_force_text):
    a = run_simulation(parse_config(zerodata_text))
    b = run_simulation(parse_config(small_force_text))
    return a.trajectory, b.trajectory


def test_distance_vanishes_between_identical_runs(two_runs):
    a, _ = two_runs
    d_rho, d_u = trajectory_distance(a, a)
    assert d_rho == 0.0 and d_u == 0.0


def test_distance_separates_different_runs(two_runs):
    a, b = two_runs
    d_rho, d_u = trajectory_distance(a, b)
    assert d_rho > 0.0 and d_u > 0.0
    # symmetric
    assert trajectory_distance(b, a) == (d_rho, d_u)


def test_distance_requires_common_grids(two_runs, zerodata_text):
    a, _ = two_runs
    other = run_simulation(
        parse_config(zerodata_text.replace("t_end = 0.05", "t_end = 0.01")))
    with pytest.raises(ConfigError, match="common time grid"):
        trajectory_distance(a, other.trajectory)


def test_delta_sweep_produces_distances_and_flags(small_force_text, tmp_path):
    cfg = parse_config(small_force_text)
    report = run_sweep(cfg, "delta", [5e-2, 2.5e-2], out_dir=tmp_path)
    assert not report.aborted
    assert [lv["passed"] for lv in report.levels] == [True, True]
    assert len(report.distance_rho) == 1
    assert report.distance_rho[0] >= 0.0
    assert "defect_linear_in_delta" in report.monotone
    assert (tmp_path / "delta_00" / "config.ini").is_file()
    # each archived level records its own delta
    level0 = (tmp_path / "delta_00" / "config.ini").read_text()
    level1 = (tmp_path / "delta_01" / "config.ini").read_text()
    assert "0.05" in level0 and "0.025" in level1


def test_hard_level_failure_aborts_with_partial_report(small_force_text):
    # an iteration budget too small for the force makes level 0 raise
    cfg = parse_config(small_force_text.replace(
        "tol_fp = 1e-12", "tol_fp = 1e-12\nmax_iter = 2"))
    report = run_sweep(cfg, "delta", [5e-2, 2.5e-2])
    assert report.aborted
    assert report.failed_level == 0
    assert len(report.levels) == 1
    assert "ConvergenceError" in report.levels[0]["error"]
    assert report.monotone == {}


def test_report_serializes(small_force_text, tmp_path):
    cfg = parse_config(small_force_text)
    report = run_sweep(cfg, "eps", [1e-2, 5e-3])
    d = report.as_dict()
    assert d["parameter"] == "eps"
    assert d["aborted"] is False
    assert d["distances_decreasing"] in (True, False, None)
