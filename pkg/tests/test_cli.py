"""End-to-end CLI behavior: files, exit codes, determinism, validation."""

import math

import pytest

from rateless_dmt import siso_outage_closed_form, SnrPoint
from rateless_dmt.cli import main
from rateless_dmt.permcode import load_codebook, prefix_min_products


def _read_rows(path):
    rows = []
    header = None
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(dict(zip(header, line.split(","))))
    return rows


def test_dmt_writes_segment_one_values(tmp_path):
    assert main(["dmt", "--M", "2", "--N", "2", "--L", "2", "--out", str(tmp_path)]) == 0
    rows = _read_rows(tmp_path / "dmt_curves.csv")
    hit = [r for r in rows if r["scheme"] == "rateless" and r["r_n"] == "0.5"]
    assert len(hit) == 1
    assert hit[0]["r"] == "1" and hit[0]["d"] == "2.5" and hit[0]["l"] == "1"


def test_dmt_four_segment_breaks(tmp_path):
    assert main(["dmt", "--M", "3", "--N", "3", "--L", "4", "--out", str(tmp_path)]) == 0
    rows = [r for r in _read_rows(tmp_path / "dmt_curves.csv") if r["scheme"] == "rateless"]
    seg_of = {r["r_n"]: r["l"] for r in rows}
    assert {r["l"] for r in rows} == {"0", "1", "2", "3", "4"}
    assert seg_of["0.75"] == "2" and seg_of["1.5"] == "3" and seg_of["2.25"] == "4"


def test_dmt_missing_antenna_count_names_key(tmp_path, capsys):
    assert main(["dmt", "--N", "2", "--L", "2", "--out", str(tmp_path)]) == 2
    assert "`M`" in capsys.readouterr().err


def test_dmt_exact_columns_round_trip(tmp_path):
    assert main(
        ["dmt", "--M", "2", "--N", "2", "--L", "2", "--exact", "--per-segment", "8", "--out", str(tmp_path)]
    ) == 0
    rows = _read_rows(tmp_path / "dmt_curves.csv")
    assert rows and all("r_exact" in r for r in rows)


def test_simulate_reruns_byte_identical(tmp_path):
    args = [
        "simulate", "--M", "1", "--N", "1", "--L", "2", "--r-n", "0.25",
        "--eta-db", "20,30", "--trials", "20000", "--seed", "7",
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "simulate_results.csv").read_bytes()
    b = (tmp_path / "b" / "simulate_results.csv").read_bytes()
    assert a == b


def test_simulate_matches_closed_form(tmp_path):
    assert main([
        "simulate", "--M", "1", "--N", "1", "--L", "2", "--r-n", "0.25",
        "--eta-db", "20", "--trials", "50000", "--seed", "4", "--out", str(tmp_path),
    ]) == 0
    rows = _read_rows(tmp_path / "simulate_results.csv")
    eta = SnrPoint.from_db(20.0)
    R = 0.25 * eta.log2_eta
    for row in rows:
        l = int(row["l"])
        if l == 0:
            assert float(row["p_hat"]) == 1.0
            continue
        oracle = siso_outage_closed_form(eta, 2 * R / l)
        assert abs(float(row["p_hat"]) - oracle) <= 3.0 * float(row["stderr"])


def test_simulate_validates_trials(tmp_path, capsys):
    assert main([
        "simulate", "--M", "1", "--N", "1", "--L", "2", "--r-n", "0.25",
        "--eta-db", "20", "--trials", "0", "--seed", "1", "--out", str(tmp_path),
    ]) == 2
    assert "`trials`" in capsys.readouterr().err


def test_simulate_hints_when_first_level_saturates(tmp_path, capsys):
    assert main([
        "simulate", "--M", "1", "--N", "1", "--L", "2", "--r-n", "0.75",
        "--eta-db", "10", "--trials", "100", "--seed", "1", "--out", str(tmp_path),
    ]) == 0
    assert "min(M,N)" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "# experiment\nM = 1\nN = 1\nL = 2\nr_n = 0.25\n"
        "eta_db_list = 10,20\ntrials = 5000\nseed = 3\n"
    )
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    # flag beats file: different seed changes the bytes
    assert main(["simulate", "--config", str(cfg), "--seed", "4", "--out", str(out2)]) == 0
    a = (out1 / "simulate_results.csv").read_text()
    b = (out2 / "simulate_results.csv").read_text()
    assert a != b
    assert "# seed=3" in a and "# seed=4" in b


def test_config_file_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("M = 1\nwhat = 2\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "`what`" in capsys.readouterr().err


def test_codes_builds_decodable_codebook(tmp_path):
    assert main([
        "codes", "--L", "2", "--bits", "2", "--eta-db", "20,30",
        "--trials", "20000", "--seed", "11", "--out", str(tmp_path),
    ]) == 0
    code = load_codebook(str(tmp_path / "codebook.txt"))
    assert min(prefix_min_products(code)) > 0
    rows = _read_rows(tmp_path / "code_trials.csv")
    assert {r["eta_db"] for r in rows} == {"20", "30"}
    assert all(0.0 <= float(r["joint_err"]) <= 1.0 for r in rows)


def test_codes_load_save_identity(tmp_path):
    out1 = tmp_path / "first"
    assert main([
        "codes", "--L", "2", "--bits", "3", "--eta-db", "20",
        "--trials", "1000", "--seed", "2", "--out", str(out1),
    ]) == 0
    out2 = tmp_path / "second"
    assert main([
        "codes", "--codebook", str(out1 / "codebook.txt"), "--eta-db", "20",
        "--trials", "1000", "--seed", "2", "--out", str(out2),
    ]) == 0
    assert (out1 / "codebook.txt").read_bytes() == (out2 / "codebook.txt").read_bytes()
    assert (out1 / "code_trials.csv").read_bytes() == (out2 / "code_trials.csv").read_bytes()


def test_codes_rejects_bits_out_of_range(tmp_path, capsys):
    assert main([
        "codes", "--L", "2", "--bits", "9", "--eta-db", "20",
        "--trials", "100", "--seed", "1", "--out", str(tmp_path),
    ]) == 2
    assert "`bits`" in capsys.readouterr().err


def test_codes_reports_malformed_codebook_line(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n2\noops\n")
    assert main([
        "codes", "--codebook", str(bad), "--eta-db", "20",
        "--trials", "100", "--seed", "1", "--out", str(tmp_path),
    ]) == 2
    assert "line 3" in capsys.readouterr().err


def test_codes_identity_baseline(tmp_path):
    assert main([
        "codes", "--L", "2", "--bits", "2", "--identity", "--eta-db", "20",
        "--trials", "1000", "--seed", "1", "--out", str(tmp_path),
    ]) == 0
    code = load_codebook(str(tmp_path / "codebook.txt"))
    assert code.perms[0] == code.perms[1]


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_verify_tightened_tolerances_fail(capsys):
    code = main(["verify", "--tol-scale", "1e-9"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out
    # exactness checks have no statistical tolerance and still pass
    assert any(line.startswith("PASS  curve-2x2-L2") for line in out.splitlines())
    assert math.isfinite(float(out.splitlines()[-1].split("/")[0]))
