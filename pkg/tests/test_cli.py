import json
import math
from pathlib import Path

import numpy as np
import pytest

from twophoton import cli
from twophoton import config as cfg
from twophoton.scattering import read_wavefunction_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_SCAN = """\
kappa_g = 5, 2
q_g = 0
gamma_g = 0
sweep = g2d_kappa
sweep_min = 0.2
sweep_max = 1
points = 3
"""


def _cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- configuration parsing -----------------------------------------------------------


def test_parse_text_handles_comments_and_spaces():
    raw = cfg.parse_text("# header\n a = 1 # trailing\n\nb=2, 3\n")
    assert raw == {"a": "1", "b": "2, 3"}


@pytest.mark.parametrize(
    "text", ["no equals sign\n", "= 3\n", "a = 1\na = 2\n"]
)
def test_parse_text_rejects_malformed_lines(text):
    with pytest.raises(cfg.ConfigError):
        cfg.parse_text(text)


def test_unknown_keys_are_rejected():
    with pytest.raises(cfg.ConfigError):
        cfg.scan_config({"kappa_g": "5", "kapa_g": "3"})


@pytest.mark.parametrize(
    "raw",
    [
        {"sweep": "length"},
        {"sweep_min": "2", "sweep_max": "1"},
        {"kappa_g": "0"},
        {"kappa_g": "nan"},
        {"error_estimate": "maybe"},
    ],
)
def test_invalid_scan_values(raw):
    with pytest.raises(cfg.ConfigError):
        cfg.scan_config(raw)


def test_point_config_needs_exactly_one_length():
    with pytest.raises(cfg.ConfigError):
        cfg.point_config({"g": "1"})
    with pytest.raises(cfg.ConfigError):
        cfg.point_config({"d": "1", "kappa_d": "2"})
    pc = cfg.point_config({"g": "2", "kappa": "5", "g2d_kappa": "0.5"})
    assert pc.pulse_d == pytest.approx(0.5 * 5 / 4)
    assert cfg.point_config({"kappa": "0.5", "kappa_d": "4"}).pulse_d == pytest.approx(8)


@pytest.mark.parametrize(
    "sweep,value,kappa_g,d", [("g2d_kappa", 0.5, 10, 5), ("kappa_d", 4, 0.5, 8), ("gd", 3, 7, 3)]
)
def test_sweep_variables_map_to_pulse_length(sweep, value, kappa_g, d):
    assert cfg.pulse_length(sweep, value, kappa_g) == pytest.approx(d)


def test_sweep_values_are_log_spaced():
    conf = cfg.scan_config({"sweep_min": "0.1", "sweep_max": "10", "points": "3"})
    assert conf.sweep_values() == pytest.approx([0.1, 1, 10])


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.cfg")))
def test_every_preset_loads(name):
    raw = cfg.load(CONFIGS / name)
    verb = raw["verb"]
    build = {
        "scan": cfg.scan_config,
        "norms": cfg.scan_config,
        "single": cfg.point_config,
        "oracle-compare": cfg.point_config,
        "pulse": cfg.pulse_config,
    }[verb]
    build(raw)


def test_table_format():
    t = cfg.Table(["x", "flag"], [[1 / 3, 0], [2.0, 1]])
    text = t.to_csv()
    assert text == "x,flag\n3.3333333333333331e-01,0\n2.0000000000000000e+00,1\n"
    assert cfg.read_table(text).column("x") == pytest.approx([1 / 3, 2.0], rel=0)


# --- helpers ---------------------------------------------------------------------------


def test_unit_conversion():
    # 1 ns of light travel is about 30 cm
    assert cli.length_in_metres(1e-9) == pytest.approx(0.299792458)
    d = cli.optimum_length(g=120e6, kappa=900e6)
    assert 8.5 <= d <= 10


def test_flagged_rows_on_failure():
    pt = cli.ScanPoint(5.0, 0.0, 0.0, 0.0, 1.0, tolerance=0.0, error_estimate=True, margin=5.0)
    row = cli.evaluate_point(pt)
    assert row["flag"] == 1  # nothing meets a zero tolerance
    ok = cli.evaluate_point(cli.ScanPoint(5.0, 0.0, 0.0, 0.0, 1.0, 1e-3, True, 5.0))
    assert ok["flag"] == 0 and ok["beta_err"] < 1e-3


def test_gnuplot_script_has_one_line_per_curve():
    t = cfg.Table(["kappa_g", "q_g", "gamma_g", "g2d_kappa", "abs_beta_minus_1"])
    t.rows = [[5, 0, 0, 0.1, 0.2], [5, 0, 0, 1, 0.3], [2, 0, 0, 0.1, 0.1]]
    script = cli.gnuplot_script("x.csv", t, "g2d_kappa", "abs_beta_minus_1", ["kappa_g", "q_g", "gamma_g"])
    assert script.count("with lines") == 2
    assert "set datafile separator ','" in script


# --- verbs -----------------------------------------------------------------------------


def test_scan_writes_csv_and_sidecar(tmp_path):
    out = tmp_path / "scan.csv"
    code = cli.main(["scan", "--config", _cfg(tmp_path, SMALL_SCAN), "--out", str(out)])
    assert code == 0
    text = out.read_bytes()
    assert b"\r" not in text
    table = cfg.read_table(text.decode())
    assert table.columns == cli.SCAN_COLUMNS
    assert len(table.rows) == 6
    assert np.all(np.abs(table.column("re_beta") + 1j * table.column("im_beta")) <= 1 + 1e-12)
    meta = json.loads((tmp_path / "scan.csv.meta.json").read_text())
    assert meta["rows"] == 6 and meta["flagged"] == 0


def test_scan_is_byte_identical_across_runs_and_workers(tmp_path):
    path = _cfg(tmp_path, SMALL_SCAN)
    outs = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"s{i}.csv"
        assert cli.main(["scan", "--config", path, "--out", str(out), "--workers", str(workers)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_tight_tolerance_gives_exit_code_two(tmp_path):
    out = tmp_path / "s.csv"
    code = cli.main(
        ["scan", "--config", _cfg(tmp_path, SMALL_SCAN), "--out", str(out), "--tolerance", "1e-30"]
    )
    assert code == 2
    assert np.all(cfg.read_table(out.read_text()).column("flag") == 1)


def test_bad_config_gives_exit_code_one(tmp_path, capsys):
    assert cli.main(["scan", "--config", _cfg(tmp_path, "kappa_g = -1\n")]) == 1
    assert "error" in capsys.readouterr().err
    assert cli.main(["scan", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_norms_verb(tmp_path):
    text = SMALL_SCAN.replace("gamma_g = 0", "gamma_g = 0.2")
    out = tmp_path / "n.csv"
    assert cli.main(["norms", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    t = cfg.read_table(out.read_text())
    assert t.columns == cli.NORM_COLUMNS
    assert np.all(t.column("norm_lin") < t.column("norm_out"))
    assert np.all(t.column("norm_out") < 1)


def test_single_writes_wavefunctions(tmp_path, capsys):
    text = "g = 1\nkappa = 5\nq = 0\ng2d_kappa = 0.5\ncsv_stride = 16\n"
    out = tmp_path / "single"
    assert cli.main(["single", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    report = capsys.readouterr().out
    assert "abs_beta_minus_1" in report
    psi_in = read_wavefunction_csv((out / "psi_in.csv").read_text())
    assert psi_in.norm2() == pytest.approx(1.0, abs=1e-6)
    assert psi_in.params["kappa"] == 5.0
    psi_out = read_wavefunction_csv((out / "psi_out.csv").read_text())
    assert psi_out.values.ndim == 2
    assert psi_out.values.shape[0] == psi_out.grid.n


def test_single_without_atom_has_unit_beta():
    pc = cfg.point_config({"g": "0", "kappa": "2", "d": "1"})
    rep = cli.run_single(pc)
    assert rep.beta == 1
    assert rep.norm_one == pytest.approx(1.0, abs=1e-6)


def test_single_reports_physical_length():
    pc = cfg.point_config(cfg.load(CONFIGS / "single-units.cfg"))
    rep = cli.run_single(pc)
    assert 8.5 <= rep.length <= 10


def test_pulse_verb(tmp_path, capsys):
    text = (
        "kappa_g = 10\nt = 80\nq_min = -0.5\nq_max = 0.5\nq_points = 3\n"
        "d_min = 1\nd_max = 16\nd_points = 9\nsamples = 2001\n"
    )
    out = tmp_path / "p.csv"
    assert cli.main(["pulse", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    lines = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
    assert 0 < float(lines["best_overlap"]) <= 1
    assert (tmp_path / "p.phi.csv").exists() and (tmp_path / "p.ridge.csv").exists()
    assert len(cfg.read_table(out.read_text()).rows) == 27


def test_optimum_pulse_overlap_bounded():
    rep = cli.run_pulse(cfg.PulseSweepConfig(kappa_g=2, t=60, q_points=3, d_points=5, samples=1501))
    assert 0 < rep.overlap <= 1 + 1e-9
    assert np.all(rep.table.column("overlap") <= rep.overlap + 1e-9)
    assert rep.phi.norm2() == pytest.approx(rep.phi_norm, rel=1e-3)


@pytest.mark.slow
def test_oracle_compare_verb(tmp_path):
    text = "g = 1\nkappa = 2\nq = 0\nd = 2\nband = 3\nringdown = 10\n"
    out = tmp_path / "o.csv"
    assert cli.main(["oracle-compare", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    t = cfg.read_table(out.read_text())
    assert t.column("err_one")[0] < 0.02
    assert t.column("err_two")[0] < 0.05
    assert math.isfinite(t.column("delta_nonlinearity")[0])
