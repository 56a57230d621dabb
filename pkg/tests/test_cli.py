import csv
import io
import json
from pathlib import Path

import pytest

from cfcinfo import cli
from cfcinfo.errors import CfcError, StabilityError
from cfcinfo.info import FREE_ROTATOR_MI

RECIPES = sorted((Path(__file__).resolve().parent.parent / "recipes").glob("*.cfg"))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fisher_position_three_is_blind(capsys):
    code, out, _ = run(capsys, "fisher", "--device", "nmzi", "--position", "3", "--t1", "0.3,0.7",
                       "--theta-w", "0,0.5")
    assert code == 0
    rows = rows_csv(out)
    assert len(rows) == 4
    assert all(float(r["F"]) == 0.0 for r in rows)


def test_fisher_other_devices(capsys):
    code, out, _ = run(capsys, "fisher", "--device", "free", "--theta-w", "0.3")
    assert code == 0 and float(rows_csv(out)[0]["D"]) == pytest.approx(1.0)
    code, out, _ = run(capsys, "fisher", "--device", "cmzi", "--n", "5", "--theta-w", "0.01")
    assert code == 0 and float(rows_csv(out)[0]["P_A"]) > 0
    code, out, _ = run(capsys, "fisher", "--device", "chained", "--n", "3", "--m", "4", "--theta-w", "1e-6")
    row = rows_csv(out)[0]
    assert code == 0 and float(row["D"]) >= float(row["D_A"])


def test_shannon_free(capsys):
    code, out, _ = run(capsys, "shannon", "--device", "free")
    assert code == 0
    assert float(rows_csv(out)[0]["H"]) == pytest.approx(FREE_ROTATOR_MI, abs=1e-6)
    assert float(rows_csv(out)[0]["H"]) == pytest.approx(0.328, abs=5e-4)


def test_shannon_grid(capsys):
    code, out, _ = run(capsys, "shannon", "--device", "nmzi", "--position", "4", "--prior", "cosine",
                       "--grid", "0.1:0.9:3", "--nodes", "64")
    rows = rows_csv(out)
    assert code == 0 and [float(r["t1"]) for r in rows] == [0.1, 0.5, 0.9]
    for r in rows:
        assert float(r["H_quadrature"]) == pytest.approx(float(r["H_exact"]), abs=1e-6)


def test_protocol_json(capsys):
    code, out, _ = run(capsys, "protocol", "--epsilon", "0.05", "--t1", "0.02")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["command"] == "protocol"
    row = doc["rows"][0]
    assert row["D"] == pytest.approx(2.7, abs=0.05)
    assert set(row) >= {"epsilon", "t1", "theta_w", "P0", "P1", "q_prime", "n_gamma", "success", "D"}


def test_sweeps(capsys, tmp_path):
    target = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "sweep-chained", "--n", "2,3", "--m", "2,4", "--threads", "2", "--out", str(target))
    assert code == 0
    rows = rows_csv(target.read_text())
    assert [(r["N"], r["M"]) for r in rows] == [("2", "2"), ("2", "4"), ("3", "2"), ("3", "4")]
    code, out, _ = run(capsys, "sweep-cmzi", "--n", "4", "--theta-w", "0,1e-3", "--format", "json",
                       "--no-timestamp")
    assert code == 0 and json.loads(out)["rows"][0]["P_A"] < 1e-14


@pytest.mark.parametrize("argv", [
    ["protocol", "--t1", "0.05", "--no-timestamp"],
    ["fisher", "--device", "nmzi", "--position", "1", "--t1", "0.2,0.4", "--format", "json", "--no-timestamp"],
    ["sweep-cmzi", "--n", "3,6", "--threads", "2"],
])
def test_reruns_are_byte_identical(capsys, tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_timestamp_present_by_default(capsys):
    _, out, _ = run(capsys, "protocol", "--t1", "0.05")
    assert "timestamp" in json.loads(out)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ncommand = fisher\ndevice = nmzi\nposition = 1\nt1 = 0.6\n"
                   "theta_w = 0.3\nno_timestamp = true\nformat = json\n")
    code, out, _ = run(capsys, "--config", str(cfg))
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["F"] == pytest.approx(4 * 0.64 / 0.91)
    code, out, _ = run(capsys, "--config", str(cfg), "--position", "2")
    row = json.loads(out)["rows"][0]
    assert row["position"] == "2"
    assert row["F"] == pytest.approx(4 * 0.36 / 0.91)


@pytest.mark.parametrize("recipe", RECIPES, ids=[r.stem for r in RECIPES])
def test_recipes_parse(recipe):
    args = cli.build_parser().parse_args(cli._assemble_argv(["--config", str(recipe)]))
    assert args.command in cli.COMMANDS
    assert args.out


@pytest.mark.parametrize("argv, code, kind", [
    (["fisher", "--theta-w", "1.5"], 2, "domain"),
    (["fisher", "--device", "laser"], 2, "usage"),
    (["protocol", "--epsilon", "1.2"], 2, "domain"),
    (["shannon", "--grid", "0:1"], 2, "usage"),
    (["fisher", "--out", "/nonexistent-dir/x.csv"], 3, "output"),
    ([], 2, "usage"),
])
def test_error_exit_codes(capsys, argv, code, kind):
    got, out, err = run(capsys, *argv)
    assert got == code
    record = json.loads(err)
    assert record["exit_code"] == code and record["error"] == kind
    assert out == ""


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("command = protocol\nwarp_factor = 9\n")
    code, _, err = run(capsys, "--config", str(cfg))
    assert code == 2 and json.loads(err)["error"] == "usage"
    cfg.write_text("command = protocol\njust a line\n")
    assert run(capsys, "--config", str(cfg))[0] == 2
    assert run(capsys, "--config", str(tmp_path / "missing.cfg"))[0] == 2


@pytest.mark.parametrize("exc, code", [(StabilityError("dt"), 4), (CfcError("other"), 5)])
def test_engine_failures_map_to_exit_codes(capsys, monkeypatch, exc, code):
    def boom(args):
        raise exc
    monkeypatch.setitem(cli.COMMANDS, "protocol", boom)
    got, _, err = run(capsys, "protocol")
    assert got == code and json.loads(err)["exit_code"] == code


def test_wavepacket_command_writes_frames(capsys, tmp_path):
    frames = tmp_path / "frames"
    code, out, _ = run(capsys, "wavepacket", "--n-points", "8192", "--frames-dir", str(frames), "--no-timestamp")
    assert code == 0
    doc = json.loads(out)
    assert [r["stage"] for r in doc["rows"]][0] == "initial"
    assert all(abs(r["norm"] - 1) < 1e-6 for r in doc["rows"])
    files = sorted(frames.glob("*.csv"))
    assert len(files) == 6
    header = files[0].read_text().splitlines()[0]
    assert header == "x,up2,down2,V"
