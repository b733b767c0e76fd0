import csv
import json

import pytest

from stokesqkd import cli
from stokesqkd.infotheory import generate_surface, mutual_info_ae

SMALL = ["--rounds", "20000"]


def run(argv):
    return cli.main([str(a) for a in argv])


def checks(report):
    return {c["name"]: c for c in report["checks"]}


def read(path):
    return path.read_bytes()


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)


def test_analyze_single_cell(tmp_path):
    out = tmp_path / "cell.csv"
    assert run(["analyze", "--r", 0, "--eta", 1, "--vm", 3, "--out", out]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1
    assert float(rows[0]["delta_i_bits"]) == pytest.approx(1.0, abs=1e-12)


def test_analyze_default_grid(tmp_path):
    out = tmp_path / "grid.csv"
    assert run(["analyze", "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,eta,n_B,delta_i_bits"
    assert len(lines) == 1 + 33 * 96
    rows = list(csv.DictReader(lines))
    half = [row for row in rows if float(row["eta"]) == 0.5]
    assert len(half) == 33 and all(float(row["delta_i_bits"]) == 0.0 for row in half)
    # r-major ascending order
    keys = [(float(row["r"]), float(row["eta"])) for row in rows]
    assert keys == sorted(keys)


def test_analyze_csv_round_trip(tmp_path):
    out = tmp_path / "grid.csv"
    run(["analyze", "--vm", 4, "--r-values", "0,0.25,1", "--eta-values", "0.3,0.5,0.77,1", "--out", out])
    grid = generate_surface([0, 0.25, 1], [0.3, 0.5, 0.77, 1], v_m=4)
    rows = list(csv.reader(out.open()))[1:]
    for row, cell in zip(rows, grid.cells(), strict=True):
        assert [float(v) for v in row] == pytest.approx(cell, rel=1e-11, abs=1e-15)
        assert row == [cli.fmt(v) for v in cell]


def test_analyze_json(tmp_path):
    out = tmp_path / "grid.json"
    run(["analyze", "--format", "json", "--r-values", "0,1", "--eta-values", "0.5,1", "--out", out])
    data = json.loads(out.read_text())
    assert data["v_m"] == 10 and len(data["cells"]) == 4
    assert data["cells"][0]["delta_i_bits"] == 0.0


def test_analyze_invalid_grid(tmp_path):
    assert run(["analyze", "--eta-values", "0.5,0.2", "--out", tmp_path / "x"]) == cli.EXIT_INVALID


def test_simulate_report(tmp_path):
    out = tmp_path / "sim.json"
    assert run(["simulate", "--vm", 4, "--eta", 2 / 3, "--rounds", 100_000, "--seed", 1, "--out", out]) == 0
    report = json.loads(out.read_text())
    assert report["all_pass"]
    i_ab = checks(report)["i_ab"]
    assert abs(i_ab["empirical"] - i_ab["analytic"]) <= 0.02


def test_simulate_boundary(tmp_path):
    out = tmp_path / "sim.json"
    run(["simulate", "--vm", 4, "--eta", 0.5, "--rounds", 100_000, "--seed", 2, "--out", out])
    report = json.loads(out.read_text())
    assert abs(checks(report)["delta_i"]["empirical"]) <= 0.03


def test_simulate_refuses_small_runs(tmp_path):
    assert run(["simulate", "--rounds", 1000, "--out", tmp_path / "x"]) == cli.EXIT_INVALID


def test_keygen_success(tmp_path):
    out = tmp_path / "key.json"
    argv = ["keygen", "--eta", 0.9, "--r", 0.2, "--vm", 10, "--rounds", 50_000, "--seed", 42, "--out", out]
    assert run(argv) == cli.EXIT_OK
    result = json.loads(out.read_text())
    assert result["verified"] and result["final_length"] > 0
    assert result["alice_key_hex"] == result["bob_key_hex"]
    terms = result["length_terms"]
    assert result["final_length"] == min(
        max(0, terms["ab_term"] - terms["ae_term"] - terms["margin"]), terms["label_bits"]
    )
    assert (tmp_path / "key.json.transcript.jsonl").exists()


def test_keygen_insecure(tmp_path):
    out = tmp_path / "key.json"
    assert run(["keygen", "--eta", 0.4, "--seed", 1, *SMALL, "--out", out]) == cli.EXIT_INSECURE
    result = json.loads(out.read_text())
    assert result["status"] == "insecure_abort"
    assert result["alice_key_hex"] == result["bob_key_hex"] == ""
    lines = (tmp_path / "key.json.transcript.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["kind"] == "abort"


def test_keygen_requires_seed(tmp_path):
    assert run(["keygen", "--out", tmp_path / "k.json"]) == cli.EXIT_INVALID


def test_keygen_explicit_transcript_path(tmp_path):
    t = tmp_path / "t.jsonl"
    run(["keygen", "--seed", 3, *SMALL, "--out", tmp_path / "k.json", "--transcript", t])
    assert t.exists() and not (tmp_path / "k.json.transcript.jsonl").exists()


def test_attack_sweep(tmp_path):
    out = tmp_path / "attack.csv"
    argv = ["attack", "--vm", 4, "--nb-values", "0.25,0.5,1,1.5", "--rounds", 100_000, "--seed", 7, "--out", out]
    assert run(argv) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["n_B"]) for r in rows] == [0.25, 0.5, 1, 1.5]
    assert float(rows[0]["n_E"]) == 4
    signs = [float(r["delta_i_bits"]) for r in rows]
    assert signs[0] > 0 and signs[1] > 0 and signs[2] == 0 and signs[3] < 0
    assert float(rows[1]["i_ae_empirical_bits"]) == pytest.approx(mutual_info_ae(4, 0.5, 0), abs=0.02)


def test_attack_json_default_sweep(tmp_path):
    out = tmp_path / "attack.json"
    assert run(["attack", "--format", "json", *SMALL, "--out", out]) == 0
    rows = json.loads(out.read_text())["rows"]
    for row in rows:
        assert (row["delta_i_bits"] > 0) == (row["n_B"] < 1)
        assert (row["delta_i_bits"] < 0) == (row["n_B"] > 1)


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--r-values", "0,0.5", "--eta-values", "0.4,0.9"],
        ["analyze", "--format", "json", "--eta-values", "0.5,1"],
        ["simulate", "--vm", 4, "--eta", 0.8, "--rounds", 20_000, "--seed", 5],
        ["keygen", "--eta", 0.9, "--r", 0.2, "--rounds", 20_000, "--seed", 42],
        ["keygen", "--eta", 0.4, "--rounds", 20_000, "--seed", 42],
        ["attack", "--nb-values", "0.5,1.5", "--rounds", 20_000, "--seed", 9],
    ],
)
def test_rerun_is_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    status = run([*argv, "--out", a])
    assert run([*argv, "--out", b]) == status
    assert read(a) == read(b)
    if argv[0] == "keygen":
        assert read(tmp_path / "a.out.transcript.jsonl") == read(tmp_path / "b.out.transcript.jsonl")


def test_stdout_output(capsys):
    assert run(["analyze", "--r", 0, "--eta", 1, "--vm", 3]) == 0
    assert capsys.readouterr().out == "r,eta,n_B,delta_i_bits\n0,1,0,1\n"


def test_config_precedence(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vm": 3, "r": 0, "eta": 0.5}))
    run(["analyze", "--config", cfg])
    assert capsys.readouterr().out.splitlines()[1] == "0,0.5,1,0"
    run(["analyze", "--config", cfg, "--eta", 1])
    assert capsys.readouterr().out.splitlines()[1] == "0,1,0,1"
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
    run(["analyze"])
    assert capsys.readouterr().out.splitlines()[1] == "0,0.5,1,0"


def test_config_keys_mirror_flag_names(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"est-fraction": 0.2, "seed": 4, "rounds": 20_000, "eta": 0.95}))
    out = tmp_path / "k.json"
    assert run(["keygen", "--config", cfg, "--out", out]) == 0
    assert json.loads(out.read_text())["est_count"] == 4000


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"vm": {"nested": 1}}'])
def test_bad_config(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run(["analyze", "--config", cfg]) == cli.EXIT_INVALID


def test_io_errors(tmp_path):
    assert run(["analyze", "--config", tmp_path / "missing.json"]) == cli.EXIT_IO
    assert run(["analyze", "--out", tmp_path / "no" / "such" / "dir.csv"]) == cli.EXIT_IO


def test_exit_codes_are_distinct():
    codes = {cli.EXIT_OK, cli.EXIT_INSECURE, cli.EXIT_RECONCILIATION, cli.EXIT_INVALID, cli.EXIT_IO}
    assert len(codes) == 5


def test_bad_flag_value_exits_invalid():
    with pytest.raises(SystemExit) as info:
        run(["analyze", "--vm", "abc"])
    assert info.value.code == cli.EXIT_INVALID


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "stokesqkd", "analyze", "--r", "0", "--eta", "1", "--vm", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.endswith("0,1,0,1\n")
