import subprocess
import sys
from pathlib import Path

import pytest

from nrsurface.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main, parse_values

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

HELP_COLUMNS = {
    "emulate": "symbol,subcarrier,phase",
    "waveform": "t,value",
    "sync-sweep": "snr_db,mean_error_ns,p95_error_ns",
    "ber-sweep": "snr_db,symbols,errors,ber",
    "beam-pattern": "angle_deg,gain_db",
    "codebook": "target_deg,bits",
    "scenario": "t,event,surface,beam,ue,snr_db",
    "power": "state,duration_ms,energy_uj,avg_uw",
}


def test_parse_values():
    assert parse_values("-5:15:5") == [-5.0, 0.0, 5.0, 10.0, 15.0]
    assert parse_values("0:2") == [0.0, 1.0, 2.0]
    assert parse_values("1, 2.5,4") == [1.0, 2.5, 4.0]
    for bad in ("a:b", "1:5:0", "", "5:1:1"):
        with pytest.raises(ValueError):
            parse_values(bad)


@pytest.mark.parametrize("cmd,cols", sorted(HELP_COLUMNS.items()))
def test_help_lists_columns(cmd, cols, capsys):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    assert cols in out and "--seed" in out


def test_sync_sweep_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["sync-sweep", "--snr", "-5:15:5", "--trials", "6", "--periods", "30", "--out", str(p)]) == EXIT_OK
    rows = a.read_text().splitlines()
    assert rows[0] == "snr_db,mean_error_ns,p95_error_ns"
    assert [r.split(",")[0] for r in rows[1:]] == ["-5", "0", "5", "10", "15"]
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["sync-sweep", "--snr", "-5:15:5", "--trials", "6", "--periods", "30", "--seed", "9", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_exit_codes(tmp_path):
    assert main(["codebook", "--targets", "85", "--out", str(tmp_path / "b.csv")]) == EXIT_VALIDATION
    assert main(["beam-pattern", "--out", str(tmp_path / "nodir" / "p.csv")]) == EXIT_IO
    assert main(["scenario", "--config", str(tmp_path / "none.toml")]) == EXIT_IO
    bad = tmp_path / "bad.toml"
    bad.write_text("schema = 2\n")
    assert main(["scenario", "--config", str(bad)]) == EXIT_VALIDATION
    with pytest.raises(SystemExit) as e:
        main(["sync-sweep", "--bogus"])
    assert e.value.code == EXIT_VALIDATION
    with pytest.raises(SystemExit) as e:
        main(["nosuchcommand"])
    assert e.value.code == EXIT_VALIDATION


def test_small_commands(tmp_path):
    assert main(["codebook", "--targets", "30", "--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert (tmp_path / "b.csv").read_text().splitlines()[1] == "30,0011001100110011"
    assert main(["beam-pattern", "--target", "20", "--out", str(tmp_path / "p.csv")]) == EXIT_OK
    assert main(["power", "--scenario", str(CONFIGS / "power.toml"), "--out", str(tmp_path / "w.csv")]) == EXIT_OK
    total = (tmp_path / "w.csv").read_text().splitlines()[-1].split(",")
    assert float(total[3]) == pytest.approx(243.3, abs=0.5)
    assert main(["ber-sweep", "--snr", "10", "--symbols", "2000", "--out", str(tmp_path / "ber.csv")]) == EXIT_OK
    assert main(["waveform", "--out", str(tmp_path / "x.iq"), "--grid", str(tmp_path / "g.csv")]) == EXIT_OK
    assert (tmp_path / "x.iq").stat().st_size > 0


def test_emulate(tmp_path, capsys):
    assert main(["emulate", "--seed", "3", "--out", str(tmp_path / "pl.bin")]) == EXIT_OK
    assert (tmp_path / "pl.bin").stat().st_size == 32


def test_scenario_events(tmp_path):
    ev, tr = tmp_path / "e.csv", tmp_path / "t.csv"
    assert main(["scenario", "--config", str(CONFIGS / "multi_ue.toml"), "--out", str(ev), "--trace", str(tr)]) == 0
    kinds = {r.split(",")[1] for r in ev.read_text().splitlines()[1:]}
    assert {"reconfig_sweep", "ssb_measure", "report_tx", "report_rx", "nbpu_rx", "reconfig_data", "data"} <= kinds


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nrsurface", "selftest", "--only", "1,2"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.count("[PASS]") == 2
