import hashlib
import json
import subprocess
import sys

import pytest

from treecut.cli import run


def test_no_args_is_usage(capsys):
    assert run([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys):
    assert run(["cut", "--n", "3", "--bogus"]) == 2
    assert run(["nonsense"]) == 2


def test_oracle_pass_and_fail(capsys):
    assert run(["oracle", "--check", "key", "--n", "3"]) == 0
    assert capsys.readouterr().out.startswith("PASS key n=3 tv=0")
    assert run(["oracle", "--check", "kcoup", "--n", "2", "--k", "2"]) == 1
    assert "tv=1/12" in capsys.readouterr().out


def test_cut_csv(capsys):
    assert run(["cut", "--mode", "ordered", "--n", "6", "--k", "2", "--count", "4", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# treecut cut") and lines[1] == "replicate,n,k,M,M_1,M_2"
    assert len(lines) == 6


def test_output_and_manifest(tmp_path):
    out = tmp_path / "trees.txt"
    assert run(["sample", "--n", "7", "--count", "5", "--seed", "9", "--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "trees.txt.manifest.json").read_text())
    assert manifest["seed"] == 9
    assert manifest["outputs"]["trees.txt"] == hashlib.sha256(out.read_bytes()).hexdigest()
    first = out.read_bytes()
    assert run(["sample", "--n", "7", "--count", "5", "--seed", "9", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_threads_do_not_change_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["fragment", "--n", "30", "--count", "2100", "--seed", "4"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_presets_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# preset\nn = 5\ncount = 3\nseed = 2\n")
    assert run(["cut", "--config", str(cfg)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 5
    assert run(["cut", "--config", str(cfg), "--count", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3
    cfg.write_text("nonsense = 1\n")
    assert run(["cut", "--n", "3", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("emit", ["kappa", "forest", "that", "roundtrip"])
def test_dynamics_emits(emit, capsys):
    assert run(["dynamics", "--n", "6", "--count", "3", "--emit", emit]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) >= 4


def test_fragment_trace_jsonl(capsys):
    assert run(["fragment", "--n", "10", "--emit", "trace", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    header = json.loads(lines[0])
    assert header["schema"] == 1
    row = json.loads(lines[1])
    assert set(row) == {"replicate", "i", "tau", "vertex", "effective", "mu_after", "L"}


def test_fragment_gw_sigma_auto(capsys):
    assert run(["fragment", "--n", "20", "--law", "geom:1/2", "--emit", "that"]) == 0
    assert run(["fragment", "--n", "20", "--law", "binary:1/2", "--count", "2"]) == 0


def test_unattainable_size_is_usage_error(capsys):
    assert run(["sample", "--model", "gw", "--law", "binary:1/3", "--n", "5"]) == 2


@pytest.mark.parametrize("emit", ["path", "marks"])
def test_excursion(emit, capsys):
    assert run(["excursion", "--n", "12", "--count", "2", "--emit", emit]) == 0


def test_verify_exports_cdf_table(tmp_path, capsys):
    out = tmp_path / "v.csv"
    code = run(["verify", "--claim", "chik", "--n", "400", "--k", "2", "--count", "2000", "--seed", "7",
                "--out", str(out)])
    text = capsys.readouterr().out
    assert code in (0, 1) and "claim=chik" in text
    rows = out.read_text().splitlines()
    assert rows[1] == "series,sample,empirical_cdf,reference_cdf" and len(rows) == 2002


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "treecut", "oracle", "--check", "key", "--n", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("PASS")
