import json
import subprocess
import sys

import pytest

from iridium_lab.cli import main
from iridium_lab.frame_codec import RING_ALERT_LEN, parse_ibr_line


def run(*argv):
    return subprocess.run([sys.executable, "-m", "iridium_lab.cli", *argv], capture_output=True, text=True)


def test_usage_errors_exit_2():
    assert run().returncode == 2
    assert run("jam-curve", "--step", "x").returncode == 2
    assert run("simulate", "teleport").returncode == 2
    r = run("jam-curve", "--step", "0")
    assert r.returncode == 2 and "usage:" in r.stderr


def test_operational_error_exit_1(tmp_path):
    bad = tmp_path / "bad.ibr"
    bad.write_text("IBR 1 1615000000 1.0 1 " + "0" * 64 + "\n")
    r = run("parse", str(bad))
    assert r.returncode == 1 and "RangeError" in r.stderr
    assert run("parse", str(tmp_path / "missing.ibr")).returncode == 1


def test_jam_curve_rows(capsys):
    assert main(["jam-curve", "--from", "-10", "--to", "5", "--step", "1", "--trials", "0", "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "js_db,analytic_prr,empirical_prr,sigma"
    assert len(lines) == 17
    assert lines[1].startswith("-10.00,") and lines[-1].startswith("5.00,")


def test_jam_curve_text_reports_crossing(capsys):
    assert main(["jam-curve", "--from", "-5", "--to", "-4", "--step", "1", "--trials", "10000"]) == 0
    assert "PRR 50% at J/S = -4.287 dB" in capsys.readouterr().out


def test_simulate_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"t{i}.txt"
        r = run("simulate", "clone_auth", "--seed", "7", "-o", str(path))
        assert r.returncode == 0
        assert "verdict=AttackSucceeded" in r.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and outs[0]


def test_simulate_set_and_config(tmp_path, capsys):
    cfg = tmp_path / "jam.cfg"
    cfg.write_text("js_db = -20\n")
    assert main(["simulate", "jam_registration", "--config", str(cfg), "--seed", "1"]) == 0
    assert "verdict=AttackFailed" in capsys.readouterr().err
    assert main(["simulate", "jam_registration", "--config", str(cfg), "--set", "js_db=3", "--seed", "1"]) == 0
    assert "verdict=AttackSucceeded" in capsys.readouterr().err
    assert main(["simulate", "jam_registration", "--set", "nonsense"]) == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IRIDIUM_LAB_SEED", "5")
    a = tmp_path / "a.ibr"
    b = tmp_path / "b.ibr"
    assert main(["synth", "--sessions", "3", "-o", str(a)]) == 0
    assert main(["synth", "--sessions", "3", "--seed", "5", "-o", str(b)]) == 0
    assert a.read_text() == b.read_text()
    monkeypatch.setenv("IRIDIUM_LAB_SEED", "five")
    assert main(["synth", "--sessions", "1", "-o", str(a)]) == 2


def test_parse_and_stats(tmp_path, capsys):
    trace = tmp_path / "trace.ibr"
    assert main(["synth", "--sessions", "5", "--seed", "2", "-o", str(trace)]) == 0
    assert main(["parse", str(trace), "--csv"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "category,frames" and out[1].startswith("IpData,")
    assert main(["stats", str(trace)]) == 0
    assert "5 lanes, 5 complete sessions" in capsys.readouterr().out


def test_stats_privacy_gate(tmp_path, capsys):
    trace = tmp_path / "trace.ibr"
    main(["synth", "--sessions", "2", "--seed", "3", "-o", str(trace)])
    assert main(["stats", str(trace), "--no-privacy"]) == 2
    assert main(["stats", str(trace), "--dump-payloads", str(tmp_path / "p")]) == 2
    assert not (tmp_path / "p").exists()
    assert main(["stats", str(trace), "--no-privacy", "--i-understand-payload-retention",
                 "--dump-payloads", str(tmp_path / "p")]) == 0
    assert len(list((tmp_path / "p").iterdir())) == 2


def test_encode(capsys):
    assert main(["encode", "lcw", "--payload-type", "4"]) == 0
    assert capsys.readouterr().out.strip() == "1" + "0" * 29
    assert main(["encode", "ring-alert", "--beam", "12", "--page", "77"]) == 0
    rec = parse_ibr_line(capsys.readouterr().out.strip())
    assert len(rec.bits) == RING_ALERT_LEN
    assert main(["encode", "lcw", "--payload-type", "8"]) == 1


def test_modulate(tmp_path, capsys):
    stem = tmp_path / "burst"
    assert main(["modulate", "--bits", "0110" * 20, "--out", str(stem)]) == 0
    meta = json.loads((tmp_path / "burst.sigmf-meta").read_text())
    assert meta["global"]["core:sample_rate"] == 250_000
    assert len(meta["annotations"]) == 1
    assert main(["modulate", "--bits", "011", "--out", str(stem)]) == 1
    assert main(["modulate", "--bits", "01", "--sample-rate", "50000", "--out", str(stem)]) == 1


def test_crack_two_keys(tmp_path, capsys):
    log = tmp_path / "crack.log"
    assert main(["crack", "--keys", "2", "--seed", "1", "--csv", "--transcript", str(log)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "key,queries,recovered,ki,seconds"
    assert [l.split(",")[2] for l in lines[1:]] == ["yes", "yes"]
    assert log.read_text().count("total queries") == 2


@pytest.mark.slow
def test_crack_twenty_keys(capsys):
    assert main(["crack", "--oracle", "simulated", "--keys", "20", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "20/20 recovered" in out
    assert len(out.splitlines()) == 22
