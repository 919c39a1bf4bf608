import subprocess
import sys

import pytest

from backhaul.cli import build_parser, main, parse_bits, resolve_config


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_bits():
    assert parse_bits("8") == [8.0]
    assert parse_bits("3:5") == [3.0, 4.0, 5.0]
    for bad in ("5:3", "x", "-1", "1:2:3"):
        with pytest.raises(Exception):
            parse_bits(bad)


def test_precedence(tmp_path):
    conf = tmp_path / "c.yaml"
    conf.write_text("users_per_cell: 6\nnoise_power: 0.5\ntrials: 30\n")
    args = build_parser().parse_args(["sumrate-compare", "--config", str(conf), "--trials", "40"])
    cfg = resolve_config(args)
    assert (cfg.users_per_cell, cfg.antennas, cfg.trials, cfg.noise_power) == (6, 12, 40, 0.5)
    assert cfg.user_positions == (1600.0,) * 6  # preset placement follows the user count
    args = build_parser().parse_args(["mean-sweep", "--noise", "3"])
    assert resolve_config(args).noise_power == 3.0


def test_csv_is_deterministic(tmp_path, capsys):
    args = ["interference-validate", "--trials", "60", "--bits", "3:5", "--seed", "4"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_bytes().split(b"\n")
    assert lines[0].startswith(b"# schema=backhaul-csv/1")
    assert lines[1] == b"l,analytic_interference,empirical_interference,rel_error,stderr"
    assert len(lines) == 6 and lines[-1] == b""


def test_stdout_and_gnuplot(tmp_path, capsys):
    gp = tmp_path / "p.gp"
    code, out, _ = _run(["mean-sweep", "--no-mc", "--bits", "4", "--gnuplot", str(gp)], capsys)
    assert code == 0
    assert out.splitlines()[1] == "avg_bits,scheme,rate_mean,stderr,analytic_rate_mean,clipped"
    assert len(out.splitlines()) == 5
    assert "results.csv" in gp.read_text()


def test_allocate_table(capsys):
    code, out, _ = _run(["allocate", "--bits", "8"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == ["user", "d1", "d2", "frac_bits", "int_bits", "sinr", "rate", "region"]
    assert [ln.split()[4] for ln in lines[1:9]] == ["8"] * 8
    assert lines[9].startswith("scheme=conventional budget=64")


def test_exit_code_config(tmp_path, capsys):
    code, _, err = _run(["allocate", "--users", "0"], capsys)
    assert code == 2 and "config error" in err
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_field: 1\n")
    code, _, err = _run(["allocate", "--config", str(bad)], capsys)
    assert code == 2 and "bad.yaml" in err
    code, _, _ = _run(["allocate", "--bits", "3:4"], capsys)
    assert code == 2
    code, _, _ = _run(["sumrate-compare", "--bits", "2.5"], capsys)
    assert code == 2


def test_exit_code_guard(capsys):
    code, _, err = _run(["sumrate-compare", "--users", "8", "--bits", "20"], capsys)
    assert code == 3 and "greedy" in err


def test_exit_code_io(tmp_path, capsys):
    code, _, err = _run(["sumrate-compare", "--bits", "3", "--out", str(tmp_path / "no" / "x.csv")], capsys)
    assert code == 4 and "x.csv" in err


def test_bad_usage_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["fly-to-moon"])
    assert info.value.code == 2


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "backhaul.cli", "allocate", "--scheme", "equal-sir", "--bits", "8"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert "scheme=equal-sir" in out.stdout
