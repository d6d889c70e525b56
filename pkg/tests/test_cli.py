import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from coset_spectrum.cli import build_parser, bundled_table2, dispatch, parse_grid, table2_check
from coset_spectrum.io import read_autocorrelation, read_spectrum, write_samples
from coset_spectrum.ruler import RulerBank, format_bank
from coset_spectrum.sim import SimConfig, simulate_received
from coset_spectrum.system import power_spectrum


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_design_then_verify(tmp_path, capsys):
    out = tmp_path / "b.bank"
    assert dispatch(["design", "--n", "103", "--m", "3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("Z=17 M=3 N=103")
    assert "achieved_Z: 17" in text
    assert dispatch(["verify", "--bank", str(out)]) == 0


@pytest.mark.parametrize("n,m,strategy", [(12, 2, "m2"), (40, 4, "greedy"), (25, 3, "greedy")])
def test_design_verify_round_trip(tmp_path, n, m, strategy):
    out = tmp_path / "x.bank"
    assert dispatch(["design", "--n", str(n), "--m", str(m), "--strategy", strategy, "--out", str(out)]) == 0
    assert dispatch(["verify", "--bank", str(out)]) == 0


def test_verify_bad_bank(tmp_path, capsys):
    bad = tmp_path / "bad.bank"
    bad.write_text(format_bank(RulerBank.of(5, [[0, 1]])))
    assert dispatch(["verify", "--bank", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "ERR:uncovered:2,3" in err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        dispatch(["design", "--bogus"])
    assert info.value.code == 2
    assert "ERR:usage:" in capsys.readouterr().err


def test_help_lists_flags():
    parser = build_parser()
    text = build_parser().format_help()
    assert "table2-check" in text
    sweep_help = parser._subparsers._group_actions[0].choices["sweep"].format_help()
    for flag in ("--n", "--m", "--z", "--p", "--l", "--seed", "--runs", "--bank", "--config", "--out", "--grid"):
        assert flag in sweep_help


def test_table2_check_passes(capsys):
    assert dispatch(["table2-check"]) == 0
    out = capsys.readouterr().out
    assert "N=43 Z=7" in out and "N=103 Z=17" in out


def test_table2_check_corrupted_row(tmp_path, capsys):
    text = bundled_table2().replace("N=43; marks=0,1,17", "N=43; marks=0,1,18")
    rows = table2_check(text)
    assert not rows[0].ok
    corrupt = tmp_path / "t.bank"
    corrupt.write_text(text)
    assert dispatch(["table2-check", "--bank", str(corrupt)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("ERR:table2:N=43")
    assert "uncovered distances" in err


def test_parse_grid():
    assert parse_grid(["m=3,7,11", "p=1,4;l=64"]) == {"m": [3, 7, 11], "p": [1, 4], "l": [64]}


def _small_config(tmp_path):
    cfg = {"N": 13, "M": 3, "Z": 2, "P": 2, "L": 16, "runs": 2, "rng_seed": 5,
           "users": [{"band_lo": "pi/9", "band_hi": "3pi/9", "power_dbm": 30, "path_loss_db": -10}]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_sweep_writes_csv_and_is_deterministic(tmp_path):
    cfg = _small_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["sweep", "--config", str(cfg), "--grid", "m=3,5,7"]
    assert dispatch(args + ["--out", str(out1)]) == 0
    assert dispatch(args + ["--out", str(out2)]) == 0
    rows = read_csv(out1 / "nmse_results.csv")
    assert [int(r["M"]) for r in rows] == [3, 5, 7]
    assert list(rows[0]) == ["M", "P", "L", "runs", "nmse"]
    assert (out1 / "nmse_results.csv").read_bytes() == (out2 / "nmse_results.csv").read_bytes()


def test_simulate_with_overrides(tmp_path):
    cfg = _small_config(tmp_path)
    assert dispatch(["simulate", "--config", str(cfg), "--l", "8", "--runs", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "nmse_results.csv")
    assert rows[0]["L"] == "8" and rows[0]["runs"] == "1"


def test_estimate_end_to_end(tmp_path):
    config = SimConfig(n=13, m=3, z=2, p=2, l=20, rng_seed=2)
    bank = config.resolved_bank()
    (tmp_path / "bank.bank").write_text(format_bank(bank))
    received = simulate_received(config, 0)
    samples = tmp_path / "samples"
    samples.mkdir()
    write_samples(samples / "part0.csv", {0: received[0], 1: received[1]})
    write_samples(samples / "part1.csv", {2: received[2], 3: received[3]})
    out = tmp_path / "out"
    assert dispatch(["estimate", "--bank", str(tmp_path / "bank.bank"), "--samples", str(samples),
                     "--blocks", "20", "--out", str(out)]) == 0
    rx = read_autocorrelation(out / "autocorrelation.csv")
    spec = read_spectrum(out / "spectrum.csv")
    assert rx.values.size == 25
    np.testing.assert_allclose(power_spectrum(rx).values, spec.values, atol=1e-9)
    rows = read_csv(out / "group_correlations.csv")
    assert len(rows) == 2 * (3 + 3 + 3)
    ac_rows = read_csv(out / "autocorrelation.csv")
    assert [int(r["lag_or_bin"]) for r in ac_rows[:3]] == [0, 1, 2]
    assert int(ac_rows[-1]["lag_or_bin"]) == -1


def test_estimate_rejects_uneven_groups(tmp_path, capsys):
    (tmp_path / "bank.bank").write_text(format_bank(RulerBank.of(3, [[0, 1], [0, 2]])))
    write_samples(tmp_path / "s.csv", {0: np.zeros(6), 1: np.zeros(6), 2: np.zeros(6)})
    assert dispatch(["estimate", "--bank", str(tmp_path / "bank.bank"), "--samples", str(tmp_path / "s.csv"),
                     "--l", "2"]) == 1
    assert "ERR:input:" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coset_spectrum", "design", "--n", "5", "--m", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "Z=2 M=2 N=5"
