import json

import numpy as np
import pytest

from blrkernels.cli import main
from blrkernels.formats import WorkloadSpec, random_factors, reconstruct_dense
from blrkernels.tensor_io import read_tensor, write_tensor


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["bench", "--repeats", "2"]) == 2
    assert main(["bench", "--paths", "nope"]) == 2
    assert main(["forward", "--path", "dense"]) == 2
    assert main(["roofline", "--scratch-kib", "0"]) == 2


def test_roofline_output(capsys):
    assert main(["roofline", "--max-n", "1024"]) == 0
    out = capsys.readouterr().out
    assert "breakpoint 215.1" in out
    line = next(l for l in out.splitlines() if l.startswith("Llama-7B") and " Blast " in l)
    assert "MemoryBound" in line and "17,716,740,096" in line


def test_roofline_missing_profile(capsys):
    assert main(["roofline", "--profile", "nowhere"]) == 1
    assert "nowhere" in capsys.readouterr().err


def test_factor_then_forward(tmp_path, capsys):
    rng = np.random.default_rng(0)
    f = random_factors(WorkloadSpec("Blast", 1, 32, 48, 4, 2), rng)
    W = reconstruct_dense(f)
    write_tensor(tmp_path / "w.blrt", W)
    X = rng.standard_normal((5, 32)).astype(np.float32)
    write_tensor(tmp_path / "x.blrt", X)
    assert main(["factor", str(tmp_path / "w.blrt"), "--method", "blast", "-r", "4", "-b", "2",
                 "--out", str(tmp_path / "f")]) == 0
    assert main(["forward", "--path", "blast_reordered", "--x", str(tmp_path / "x.blrt"),
                 "--weights", str(tmp_path / "f"), "--tile", "16,16,16,16",
                 "--out", str(tmp_path / "y.blrt")]) == 0
    Y = read_tensor(tmp_path / "y.blrt")
    assert np.linalg.norm(Y - X @ W) <= 1e-3 * np.linalg.norm(X @ W)
    assert "intermediate_bytes=" in capsys.readouterr().out

    assert main(["factor", str(tmp_path / "w.blrt"), "--method", "monarch", "-r", "3", "-b", "2",
                 "--out", str(tmp_path / "m")]) == 1


def test_verify_small(capsys):
    assert main(["verify", "--cases", "8"]) == 0
    assert "0 mismatched" in capsys.readouterr().out


def test_bench_small(tmp_path, capsys):
    cfg = tmp_path / "c.jsonl"
    cfg.write_text(json.dumps({"model": "t", "layer": "l", "i": 32, "o": 32, "method": "Monarch",
                               "r": 8, "b": 2, "n": 8}) + "\n")
    out = tmp_path / "b.csv"
    assert main(["bench", "--config", str(cfg), "--warmups", "1", "--repeats", "3",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4 and lines[0].startswith("model,layer,method,path")


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.jsonl"
    cfg.write_text('{"model": "t"}\n')
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "b.csv")]) == 1
    assert "c.jsonl:1" in capsys.readouterr().err
