"""Command-line behavior: formats, exit codes, determinism."""

import json

import numpy as np
import pytest

from quasireg import Dist, cli
from quasireg.cli import load_dist, read_sequence, run


@pytest.fixture
def dist3(tmp_path):
    p = tmp_path / "d3.json"
    p.write_text('{"symbols": ["a", "b", "c"], "probs": ["1/2", "1/3", "1/6"]}')
    return str(p)


@pytest.fixture
def dist_csv(tmp_path):
    p = tmp_path / "d2.csv"
    p.write_text("x,1/2\ny,1/2\n")
    return str(p)


# ---------------------------------------------------------------------------
# file formats


def test_load_dist_json(dist3):
    d = load_dist(dist3)
    assert d.k == 3 and d.name_of(2) == "c"


def test_load_dist_csv(dist_csv):
    d = load_dist(dist_csv)
    assert d.k == 2 and d.name_of(0) == "x"


def test_load_dist_csv_header_and_comments(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("symbol,prob\n# a comment\nu,2/3\nv,1/3\n")
    d = load_dist(str(p))
    assert d.k == 2 and d.name_of(0) == "u"


def test_load_dist_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("only-one-field\n")
    with pytest.raises(ValueError):
        load_dist(str(bad))
    nojson = tmp_path / "bad.json"
    nojson.write_text('{"symbols": ["a"]}')
    with pytest.raises(ValueError):
        load_dist(str(nojson))


def test_sequence_roundtrip_compact(tmp_path, dist3):
    d = load_dist(dist3)
    seq = tmp_path / "s.txt"
    seq.write_text("abacba\n")
    got = np.concatenate(list(read_sequence(str(seq), d)))
    assert got.tolist() == [0, 1, 0, 2, 1, 0]


def test_sequence_roundtrip_lines(tmp_path):
    d = Dist.make(["1/2", "1/2"], names=["on", "off"])
    seq = tmp_path / "s.txt"
    seq.write_text("on\noff\non\n")
    got = np.concatenate(list(read_sequence(str(seq), d)))
    assert got.tolist() == [0, 1, 0]


def test_sequence_unknown_symbol(tmp_path, dist3):
    d = load_dist(dist3)
    seq = tmp_path / "s.txt"
    seq.write_text("abz\n")
    with pytest.raises(ValueError):
        list(read_sequence(str(seq), d))


# ---------------------------------------------------------------------------
# commands and exit codes


def test_gen_lowdisc_and_analyze(tmp_path, dist3, capsys):
    out = tmp_path / "seq.txt"
    stats = tmp_path / "stats.json"
    rc = run(["gen-lowdisc", "--dist", dist3, "--n", "600",
              "--out", str(out), "--stats", str(stats), "--check"])
    assert rc == 0
    text = out.read_text()
    assert len(text.rstrip("\n")) == 600  # compact single-char mode
    rep = json.loads(stats.read_text())
    assert rep["command"] == "gen-lowdisc"
    assert rep["discrepancy_max"] <= 1.0
    assert set(rep["observed_qr"]) == {"a", "b", "c"}

    rc = run(["analyze", "--dist", dist3, "--seq", str(out)])
    assert rc == 0
    rep2 = json.loads(capsys.readouterr().out)
    assert rep2["length"] == 600
    assert rep2["density"]["a"] == 0.5


def test_gen_2qr_check_passes(tmp_path, dist3):
    out = tmp_path / "q.txt"
    rc = run(["gen-2qr", "--dist", dist3, "--n", "4000",
              "--out", str(out), "--check"])
    assert rc == 0


def test_gen_epsqr_stats_report(tmp_path):
    dist = tmp_path / "u16.json"
    dist.write_text(json.dumps({
        "symbols": [f"s{i}" for i in range(16)],
        "probs": ["1/16"] * 16,
    }))
    out = tmp_path / "e.txt"
    stats = tmp_path / "e.json"
    rc = run(["gen-epsqr", "--dist", str(dist), "--eps", "1/2", "--n", "20000",
              "--seed", "3", "--bucket-cap", "8",
              "--out", str(out), "--stats", str(stats), "--check"])
    assert rc == 0
    rep = json.loads(stats.read_text())
    assert rep["report"]["big"] == [1]
    assert max(rep["observed_qr"].values()) <= 1.5
    # multi-character names: one per line
    assert out.read_text().splitlines()[0].startswith("s")


def test_exit_code_one_on_bad_args(capsys):
    assert run(["no-such-command"]) == 1
    assert run(["gen-lowdisc"]) == 1  # missing required arguments
    assert run([]) == 1


def test_exit_code_two_on_bad_inputs(tmp_path, dist3, capsys):
    assert run(["analyze", "--dist", dist3, "--seq",
                str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"probs": ["1/2", "1/3"]}')  # sums to 5/6
    assert run(["gen-lowdisc", "--dist", str(bad), "--n", "10"]) == 2
    # epsqr precondition: no big bucket at default cap
    small = tmp_path / "u4.json"
    small.write_text('{"probs": ["1/4", "1/4", "1/4", "1/4"]}')
    assert run(["gen-epsqr", "--dist", str(small), "--eps", "1/4",
                "--n", "10"]) == 2


def test_exit_code_three_on_check_breach(tmp_path, dist3, monkeypatch, capsys):
    def broken_stream(dist, chunk):
        while True:
            yield np.zeros(chunk, dtype=np.int64)  # constant symbol 0

    monkeypatch.setattr(cli, "lowdisc_stream", broken_stream)
    rc = run(["gen-lowdisc", "--dist", dist3, "--n", "500",
              "--out", str(tmp_path / "x.txt"), "--check"])
    assert rc == 3
    assert "contract" in capsys.readouterr().err


def test_pinwheel_check_solve(tmp_path, capsys):
    assert run(["pinwheel", "solve", "--v", "2,3,6"]) == 0
    assert capsys.readouterr().out.strip() == "UNSCHEDULABLE"

    assert run(["pinwheel", "solve", "--v", "2,4,8"]) == 0
    word = capsys.readouterr().out.split()
    sched = tmp_path / "w.txt"
    sched.write_text(" ".join(word) + "\n")
    assert run(["pinwheel", "check", "--v", "2,4,8",
                "--schedule", str(sched)]) == 0
    assert capsys.readouterr().out.strip() == "OK"

    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 1 2 1 3\n")
    assert run(["pinwheel", "check", "--v", "2,3,6",
                "--schedule", str(bad)]) == 0
    assert capsys.readouterr().out.strip() == "VIOLATION task=2 start=5"


def test_pinwheel_gen(tmp_path):
    out = tmp_path / "pw.txt"
    stats = tmp_path / "pw.json"
    v = ",".join(["40"] * 20)
    rc = run(["pinwheel", "gen", "--v", v, "--eps", "1/2", "--n", "8000",
              "--seed", "0", "--out", str(out), "--stats", str(stats)])
    assert rc == 0
    word = [int(x) for x in out.read_text().split()]
    assert len(word) == 8000
    rep = json.loads(stats.read_text())
    assert rep["eps_effective"] == "1/2"
    assert all(int(g) <= 40 for g in rep["max_gap"].values())


def test_pinwheel_gen_infeasible_is_exit_two():
    assert run(["pinwheel", "gen", "--v", "2,2,2", "--eps", "1/2",
                "--n", "10"]) == 2


# ---------------------------------------------------------------------------
# determinism


def test_byte_identical_reruns(tmp_path, dist3):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        rc = run(["gen-2qr", "--dist", dist3, "--n", "5000",
                  "--out", str(path)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    dist = tmp_path / "u.json"
    dist.write_text(json.dumps({"probs": ["1/128"] * 128}))
    args = ["gen-epsqr", "--dist", str(dist), "--eps", "1/4", "--n", "20000",
            "--seed", "3"]
    a, b, c = (tmp_path / x for x in ("a.txt", "b.txt", "c.txt"))
    assert run(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("QUASIREG_SEED", "7")
    assert run(args + ["--out", str(b)]) == 0
    monkeypatch.setenv("QUASIREG_SEED", "3")
    assert run(args + ["--out", str(c)]) == 0
    assert a.read_bytes() != b.read_bytes()
    assert a.read_bytes() == c.read_bytes()


def test_env_seed_must_be_integer(tmp_path, monkeypatch, dist3, capsys):
    monkeypatch.setenv("QUASIREG_SEED", "not-a-number")
    assert run(["gen-epsqr", "--dist", dist3, "--eps", "1/4",
                "--n", "10", "--seed", "1"]) == 1
