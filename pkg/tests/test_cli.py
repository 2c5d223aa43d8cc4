"""Command-line interface: exit codes, outputs, file layout."""

import csv
import os
import re

import pytest

from mimomc.cli import main


def _run_in(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    return main(argv)


def test_presets_lists_all_names(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("coh-s1", "coh-s2", "recov-s1", "recov-s2", "wave-spectrum",
                 "wave-recov", "doa-s1", "doa-s2", "scheme-compare"):
        assert name in out
    assert len(out.strip().splitlines()) == 9


def test_run_tiny_preset_writes_tables_and_figures(tmp_path, capsys):
    code = main(["run", "--preset", "scheme-compare", "--trials", "2",
                 "--override", "size_list=4,8",
                 "--override", "delta_theta_list=5",
                 "--out", str(tmp_path / "res")])
    assert code == 0
    out = capsys.readouterr().out
    assert "preset scheme-compare: 4 sweep points x 2 trials" in out
    trials = tmp_path / "res" / "trials.csv"
    summary = tmp_path / "res" / "summary.csv"
    figure = tmp_path / "res" / "scheme_compare.png"
    for path in (trials, summary, figure):
        assert path.exists(), path
        assert f"wrote {path}" in out
    with open(trials, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["preset", "master_seed"]
    assert len(rows) == 1 + 4 * 2


def test_run_no_figures_writes_csv_only(tmp_path):
    code = main(["run", "--preset", "scheme-compare", "--trials", "1",
                 "--override", "size_list=4",
                 "--override", "delta_theta_list=5",
                 "--out", str(tmp_path / "res"), "--no-figures"])
    assert code == 0
    names = sorted(os.listdir(tmp_path / "res"))
    assert names == ["summary.csv", "trials.csv"]


def test_run_unknown_preset_exits_2(tmp_path, capsys):
    code = main(["run", "--preset", "nope", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_run_bad_override_exits_2(tmp_path, capsys):
    code = main(["run", "--preset", "scheme-compare",
                 "--override", "n_trials=many", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "n_trials" in capsys.readouterr().err


def test_run_override_without_equals_exits_2(tmp_path, capsys):
    code = main(["run", "--preset", "scheme-compare", "--override", "bare",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "key=value" in capsys.readouterr().err


def test_run_without_preset_exits_2(tmp_path, capsys):
    code = main(["run", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "no preset" in capsys.readouterr().err


def test_run_reads_preset_from_config_file(tmp_path, capsys):
    cfg = tmp_path / "job.cfg"
    cfg.write_text("preset = scheme-compare\n"
                   "n_trials = 1\n"
                   "size_list = 4\n"
                   "delta_theta_list = 5\n", encoding="utf-8")
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "res"),
                 "--no-figures"])
    assert code == 0
    assert "preset scheme-compare: 2 sweep points x 1 trials" \
        in capsys.readouterr().out


def test_run_seed_flag_changes_provenance_column(tmp_path):
    def run(seed, out):
        assert main(["run", "--preset", "scheme-compare", "--trials", "1",
                     "--override", "size_list=4",
                     "--override", "delta_theta_list=5",
                     "--seed", str(seed), "--out", str(tmp_path / out),
                     "--no-figures"]) == 0

    run(1, "a")
    run(2, "b")
    with open(tmp_path / "a" / "trials.csv", newline="",
              encoding="utf-8") as fh:
        rows_a = list(csv.DictReader(fh))
    with open(tmp_path / "b" / "trials.csv", newline="",
              encoding="utf-8") as fh:
        rows_b = list(csv.DictReader(fh))
    assert {r["master_seed"] for r in rows_a} == {"1"}
    assert {r["master_seed"] for r in rows_b} == {"2"}
    assert rows_a[0]["phi"] != rows_b[0]["phi"]


def test_spectrum_smoke_with_completion_and_2d(tmp_path, capsys):
    code = main(["spectrum", "--doas", "10,20", "--speeds", "150,400",
                 "--mt", "8", "--mr", "8", "--pulses", "3",
                 "--occupancy", "0.5", "--snr", "25", "--grid=-30:40:0.1",
                 "--two-d", "--out", str(tmp_path / "spec")])
    assert code == 0
    out = capsys.readouterr().out
    assert (tmp_path / "spec" / "spectrum.csv").exists()
    assert (tmp_path / "spec" / "spectrum.png").exists()
    assert "estimated DOAs (deg):" in out
    assert "joint (DOA deg, speed m/s):" in out
    with open(tmp_path / "spec" / "spectrum.csv", newline="",
              encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta_deg", "power"]
    assert len(rows) == 1 + 701


def test_spectrum_recovers_well_separated_doas(tmp_path, capsys):
    # Values with a leading dash need the --flag=value spelling.
    code = main(["spectrum", "--doas=-20,35", "--mt", "10", "--mr", "10",
                 "--pulses", "3", "--grid=-60:60:0.05",
                 "--out", str(tmp_path / "spec"), "--no-figures"])
    assert code == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines()
                if l.startswith("estimated DOAs"))
    got = sorted(float(x) for x in line.split(":", 1)[1].split(","))
    assert got[0] == pytest.approx(-20.0, abs=0.01)
    assert got[1] == pytest.approx(35.0, abs=0.01)


def test_spectrum_joint_estimates_survive_wide_transmit_spacing(tmp_path,
                                                                capsys):
    # Under the default virtual-array transmit spacing the blind joint
    # scan cannot tell -20 deg from its grating twin near -0.5 deg; the
    # command must anchor the speed scan at the full-array DOA estimates.
    code = main(["spectrum", "--doas=-20,35", "--speeds", "150,400",
                 "--mt", "10", "--mr", "12", "--pulses", "5",
                 "--grid=-60:60:0.1", "--two-d",
                 "--out", str(tmp_path / "spec"), "--no-figures"])
    assert code == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("joint"))
    pairs = re.findall(r"\(([-0-9.]+), ([-0-9.]+)\)", line)
    got = sorted((float(t), float(v)) for t, v in pairs)
    assert len(got) == 2
    assert got[0][0] == pytest.approx(-20.0, abs=0.01)
    assert got[0][1] == pytest.approx(150.0, abs=2.0)
    assert got[1][0] == pytest.approx(35.0, abs=0.01)
    assert got[1][1] == pytest.approx(400.0, abs=2.0)


def test_spectrum_bad_grid_exits_2(tmp_path, capsys):
    code = main(["spectrum", "--doas", "10", "--grid", "90:-90:0.1",
                 "--out", str(tmp_path / "spec")])
    assert code == 2
    assert "grid" in capsys.readouterr().err


def test_spectrum_mismatched_speeds_exits_2(tmp_path, capsys):
    code = main(["spectrum", "--doas", "10,20", "--speeds", "100",
                 "--out", str(tmp_path / "spec")])
    assert code == 2
    assert "speed" in capsys.readouterr().err
