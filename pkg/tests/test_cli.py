import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randhill import cli
from randhill.table import SweepTable, loglog_slope, read_table


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(allow_nan=False), min_size=1, max_size=20))
def test_table_round_trip_is_exact(values):
    t = SweepTable({"x": values, "i": list(range(len(values)))}, {"seed": 3, "model": "dist=symmetric q0=0.5 af=2.0"})
    t.summary["slope"] = -1.25
    back = SweepTable.from_csv(t.to_csv())
    assert back.columns["x"] == [float(v) for v in values]
    assert back.columns["i"] == list(range(len(values)))
    assert back.metadata == {"seed": 3, "model": "dist=symmetric q0=0.5 af=2.0"}
    assert back.summary == {"slope": -1.25}


def test_table_special_values_and_strings(tmp_path):
    t = SweepTable({"a": [math.inf, -0.0, 1e-300], "s": ["h", "g", "h"]}, {"k": "v"})
    path = tmp_path / "t.csv"
    t.write(path)
    back = read_table(path)
    assert back.columns["a"][0] == math.inf and back.columns["s"] == ["h", "g", "h"]
    assert back.to_csv() == t.to_csv()


def test_table_rejects_ragged_columns():
    with pytest.raises(ValueError):
        SweepTable({"a": [1.0], "b": [1.0, 2.0]})


def test_loglog_slope():
    x = np.array([1.0, 10.0, 100.0])
    assert loglog_slope(x, 3 * x**-2) == pytest.approx(-2.0)
    assert math.isnan(loglog_slope(x, [1.0, 0.0, 1.0]))


def test_af_grid_hits_squares_exactly():
    g = cli.af_grid(0.5, 10.0, 191)
    assert g[0] == 0.5 and g[-1] == 10.0
    for sq in (1.0, 4.0, 9.0):
        assert sq in g
    assert np.allclose(np.diff(g), 0.05)


def test_cycles_scaled_for_smallest_amplitudes():
    assert cli.cycles_for_ell(10**6, 4) == 10**6
    assert cli.cycles_for_ell(10**6, 8) == 4 * 10**6
    assert cli.cycles_for_ell(10**6, 8, scale=False) == 10**6


def test_bands_small_q_widths_equal(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["bands", "--q0", "0.2", "--out", str(out)]) == 0
    t = read_table(out)
    # symmetric q0 = 0.2 has mean |q| = 0.1
    assert t.columns["width"] == pytest.approx([0.2 / math.pi] * 3)
    assert cli.main(["bands", "--regime", "large_q", "--dist", "constant", "--q0", "100", "--out", str(out)]) == 0
    w = read_table(out).columns["width"]
    assert w[0] == pytest.approx(0.025465, abs=1e-6) and w[1] / w[0] == pytest.approx(4.0)


def test_fig1_small_run_and_summary(tmp_path):
    out = tmp_path / "f1.csv"
    assert cli.main(["fig1", "--cycles", "5000", "--trials", "4", "--points", "3", "--out", str(out), "--plot-script"]) == 0
    t = read_table(out)
    assert t.n_rows == 3 and t.columns["q0"][0] == 32.0
    assert set(t.summary) == {"slope_diff21", "slope_diff_cor"}
    assert t.metadata["af_note"].startswith("af = 0.5")
    assert (tmp_path / "f1.csv.plot.py").exists()
    compile((tmp_path / "f1.csv.plot.py").read_text(), "plot", "exec")


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["fig1", "--af", "1", "--cycles", "2000", "--trials", "2"]) == 2
    assert "resonant" in capsys.readouterr().err
    assert cli.main(["fig1", "--out", str(tmp_path / "missing" / "x.csv")]) == 2
    assert cli.main(["fig1", "--cycles", "many"]) == 2
    assert cli.main(["fig1", "--q0-min", "100", "--q0-max", "200"]) == 2
    assert cli.main(["nosuch"]) == 2
    assert cli.main(["fig1", "--seed", "-4"]) == 2


def test_numeric_failure_exit_code(monkeypatch):
    from randhill.errors import NonFiniteError

    def boom(*a, **k):
        raise NonFiniteError("overflow")

    monkeypatch.setattr(cli, "run_moments", boom)
    assert cli.main(["moments"]) == 3


def test_stdout_output(capsys):
    assert cli.main(["bands"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("# command: bands") and "n,af_center,width,half_width" in text


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "randhill.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "randhill" in r.stdout


def test_fig3_columns_and_classical_law(tmp_path):
    t = cli.run_fig3(0.5, 3.0, 6, n_cycles=2000, n_trials=2, n_samples=2000)
    assert list(t.columns)[:6] == ["af", "gamma_mc", "gamma_mc_stderr", "gamma_thm31", "gamma_inf", "gamma_classical"]
    assert t.metadata["classical_q"] == 1.25


def test_fp_check_summary():
    t = cli.run_fp_check(n_traj=1000, n_cycles=200, mc_cycles=2000, n_trials=2)
    s = t.summary
    assert s["fp_over_thm31_leading"] == pytest.approx(4 / math.pi)
    assert t.n_rows == 201
