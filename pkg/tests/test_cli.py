import csv
import io
import json
import math
import subprocess
import sys

import pytest

from sparsekey.cli import (
    COMMANDS,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    SweepConfig,
    config_from_output,
    main,
    parse_config_text,
)
from sparsekey.outage import backoff_threshold, outage_exact

FIG_SNR = """\
# rate versus SNR at W = 100 MHz
bandwidth_hz = 100e6
max_delay_s = 10e-6
delta = 0.5
theta = 0.5
eta = 0.1
deltas = 0.5,0.75,1.0
grid_min = 0.1
grid_max = 1000
grid_points = 5
grid_log = true
samples = 20000
"""

FIG_EXP = """\
bandwidth_hz = 100e6
max_delay_s = 100e-9
delta = 0.5
theta = 0.5
eta = 0.9
alpha = 0.9
deltas = 0.5,0.75,1.0
grid_min = 20e6
grid_max = 1e9
grid_points = 8
"""


def read_csv(path):
    text = path.read_text()
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return text, rows


@pytest.fixture
def fig_snr(tmp_path):
    p = tmp_path / "snr.cfg"
    p.write_text(FIG_SNR)
    return p


@pytest.fixture
def fig_exp(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(FIG_EXP)
    return p


def test_ergodic_snr_reproduces_ordering(fig_snr, tmp_path):
    out = tmp_path / "a.csv"
    assert main(["--config", str(fig_snr), "--command", "ergodic-snr", "--seed", "7", "--out", str(out)]) == EXIT_OK
    text, rows = read_csv(out)
    assert text.startswith("# sparsekey ")
    low, high = rows[0], rows[-1]
    assert float(low["snr"]) == pytest.approx(0.1) and float(high["snr"]) == pytest.approx(1000)
    assert float(low["rate_d0.5"]) > float(low["rate_d1.0"])
    assert float(high["rate_d0.5"]) < float(high["rate_d1.0"])


def test_same_seed_gives_identical_files(fig_snr, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        main(["--config", str(fig_snr), "--command", "ergodic-snr", "--seed", "7", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["--config", str(fig_snr), "--command", "ergodic-snr", "--seed", "8", "--out", str(c)])
    assert a.read_bytes() != c.read_bytes()


def test_header_round_trips(fig_snr, tmp_path):
    out = tmp_path / "a.csv"
    main(["--config", str(fig_snr), "--command", "ergodic-snr", "--seed", "7", "--out", str(out)])
    cfg = config_from_output(out.read_text())
    ref = SweepConfig.from_pairs({**parse_config_text(FIG_SNR), "command": "ergodic-snr", "seed": "7"})
    assert cfg == ref


def test_exponent_columns_monotone_in_delta(fig_exp, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["--config", str(fig_exp), "--command", "outage-exponent", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert len(rows) == 8
    for r in rows:
        assert float(r["a"]) == pytest.approx(0.573457, abs=5e-7)
        assert float(r["exponent_d0.5"]) < float(r["exponent_d0.75"]) < float(r["exponent_d1.0"])


def test_impossible_regime_writes_inf_and_warns(fig_exp, tmp_path, capsys):
    out = tmp_path / "e.csv"
    code = main(["--config", str(fig_exp), "--command", "outage-exponent", "--set", "eta=0.1", "--out", str(out)])
    assert code == EXIT_OK
    assert "warning" in capsys.readouterr().err
    _, rows = read_csv(out)
    assert all(r["exponent_d0.5"] == "inf" for r in rows)


def test_json_output_matches_csv_schema(fig_exp, capsys):
    main(["--config", str(fig_exp), "--command", "outage-exponent", "--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"][:3] == ["bandwidth_hz", "a", "L_d0.5"]
    assert len(doc["rows"]) == 8 and doc["config"]["command"] == "outage-exponent"


def test_conditioned_outage_mc_tracks_exact_tail(tmp_path):
    cfg = tmp_path / "o.cfg"
    cfg.write_text(
        "bandwidth_hz = 4e8\nmax_delay_s = 1e-6\ndelta = 0.5\ntheta = 0.5\neta = 0.9\n"
        "snr = 1.0\nconditioned = true\ngrid_min = 0.85\ngrid_max = 0.95\ngrid_points = 3\n"
    )
    out = tmp_path / "o.csv"
    assert main(["--config", str(cfg), "--command", "outage-mc", "--seed", "3", "--samples", "100000",
                 "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    for r in rows:
        assert int(r["L"]) == 20
        a = backoff_threshold(float(r["alpha"]), float(r["A"]), 0.5)
        assert float(r["a"]) == pytest.approx(a)
        assert float(r["p_exact"]) == pytest.approx(outage_exact(20, 0.5, a))
        sigma = math.sqrt(float(r["p_exact"]) * (1 - float(r["p_exact"])) / 1e5)
        assert abs(float(r["p_mc"]) - float(r["p_exact"])) <= 3 * sigma + 1e-12


def test_leakage_command(tmp_path):
    cfg = tmp_path / "l.cfg"
    cfg.write_text(
        "bandwidth_hz = 1e8\nmax_delay_s = 1e-6\ndelta = 0.5\ntheta = 0.5\neta = 0.5\n"
        "grid_min = 2\ngrid_max = 4\ngrid_points = 2\nsamples = 10\n"
    )
    out = tmp_path / "l.csv"
    assert main(["--config", str(cfg), "--command", "leakage", "--seed", "1", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert [int(r["n"]) for r in rows] == [2, 4]
    assert all(r["bound_holds"] == "true" and r["fano_holds"] == "true" for r in rows)


def test_mi_oracle_command(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text(
        "bandwidth_hz = 1e8\nmax_delay_s = 1e-6\ndelta = 0.5\ntheta = 0.5\neta = 0.8\n"
        "power = 4\nsnr_a = 4\nsnr_b = 4\nsnr_e = 4\ngrid_min = 16\ngrid_max = 256\ngrid_points = 2\n"
    )
    out = tmp_path / "m.csv"
    assert main(["--config", str(cfg), "--command", "mi-oracle", "--seed", "2", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert [int(r["K"]) for r in rows] == [16, 256]
    assert float(rows[-1]["rel_err_xy"]) <= 0.01 and float(rows[-1]["rel_err_xz"]) <= 0.01
    chips = tmp_path / "chips.txt"
    chips.write_text("2.0\n")
    out2 = tmp_path / "m2.csv"
    assert main(["--config", str(cfg), "--command", "mi-oracle", "--seed", "2",
                 "--set", f"sounding_file={chips}", "--out", str(out2)]) == EXIT_OK
    _, rows = read_csv(out2)
    assert float(rows[0]["rel_err_xy"]) < 1e-9


def test_degraded_check_command(capsys):
    code = main(["--command", "degraded-check", "--set", "bandwidth_hz=1e8", "--set", "max_delay_s=1e-6",
                 "--set", "delta=0.5", "--set", "theta=0.5", "--set", "eta=0.5",
                 "--set", "grid_min=0.1", "--set", "grid_max=10"])
    assert code == EXIT_OK
    body = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert body[0] == "power,bob_snr,eve_snr,degraded"
    assert all(l.endswith("true") for l in body[1:])


@pytest.mark.parametrize(
    "argv",
    [
        ["--command", "leakage"],
        ["--command", "ergodic-snr", "--seed", "1", "--set", "bogus=1"],
        ["--command", "outage-exponent", "--set", "grid_min=5", "--set", "grid_max=1"],
        ["--set", "delta=0.5"],
        ["--command", "outage-exponent", "--set", "delta=abc"],
        ["--command", "outage-exponent", "--set", "bandwidth_hz=1e3", "--set", "max_delay_s=1e-6"],
        ["--command", "outage-exponent", "--set", "lambda=2"],
        ["--command", "ergodic-bandwidth", "--seed", "1"],
    ],
)
def test_invalid_configurations_exit_one(argv, capsys):
    base = ["--set", "bandwidth_hz=1e8", "--set", "max_delay_s=1e-6", "--set", "delta=0.5",
            "--set", "theta=0.5", "--set", "eta=0.5", "--set", "grid_min=1", "--set", "grid_max=2"]
    assert main(base + argv) == EXIT_CONFIG
    assert "sparsekey:" in capsys.readouterr().err


def test_missing_config_file_exits_one(tmp_path):
    assert main(["--config", str(tmp_path / "nope.cfg"), "--command", "outage-exponent"]) == EXIT_CONFIG


def test_runtime_failure_exits_two(tmp_path, capsys):
    chips = tmp_path / "bad.txt"
    chips.write_text("1,2,3\n")
    argv = ["--command", "mi-oracle", "--seed", "1", "--set", "bandwidth_hz=1e8", "--set", "max_delay_s=1e-6",
            "--set", "delta=0.5", "--set", "theta=0.5", "--set", "eta=0.5", "--set", "grid_min=1",
            "--set", "grid_max=2", "--set", f"sounding_file={chips}"]
    assert main(argv) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_every_command_is_wired():
    assert set(COMMANDS) == {
        "ergodic-snr", "ergodic-bandwidth", "outage-exponent", "outage-mc", "leakage", "mi-oracle", "degraded-check",
    }


def test_module_entry_point(fig_exp):
    proc = subprocess.run(
        [sys.executable, "-m", "sparsekey", "--config", str(fig_exp), "--command", "outage-exponent"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "exponent_d1.0" in proc.stdout


def test_ergodic_bandwidth_with_onoff(tmp_path):
    cfg = tmp_path / "w.cfg"
    cfg.write_text(
        "bandwidth_hz = 1e8\nmax_delay_s = 10e-6\ndelta = 0.5\ntheta = 0.5\neta = 0.1\nsnr = 10\n"
        "onoff = true\ngrid_min = 4e5\ngrid_max = 1e9\ngrid_points = 4\ngrid_log = true\nsamples = 5000\n"
    )
    out = tmp_path / "w.csv"
    assert main(["--config", str(cfg), "--command", "ergodic-bandwidth", "--seed", "5", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert float(rows[0]["bandwidth_hz"]) == pytest.approx(4e5)
    assert all(0 < float(r["lambda_d0.5"]) <= 1 for r in rows)
    assert all(float(r["rate_d0.5"]) > 0 for r in rows)


def test_unconditioned_outage_mc_with_optimal_lambda(tmp_path):
    cfg = tmp_path / "u.cfg"
    cfg.write_text(
        "bandwidth_hz = 4e7\nmax_delay_s = 1e-6\ndelta = 0.5\ntheta = 0.5\neta = 0.5\nsnr = 0.5\n"
        "lambda = opt\ngrid_min = 0.5\ngrid_max = 1\ngrid_points = 3\nsamples = 20000\n"
    )
    out = tmp_path / "u.csv"
    assert main(["--config", str(cfg), "--command", "outage-mc", "--seed", "5", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    lam = float(rows[0]["lambda"])
    assert 0 < lam < 1
    p = [float(r["p_mc"]) for r in rows]
    # larger alpha asks for a larger rate, so outage can only grow
    assert p == sorted(p)
