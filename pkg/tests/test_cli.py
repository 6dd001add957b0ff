import json

import numpy as np
import pytest

from rfb.cli import main
from rfb.runtime import write_signal

SMALL = ["--partition", "2/5,1/5,2/5", "--stages", "2", "--grid", "256", "--restarts", "2", "--max-iter", "30"]


def run(*args):
    return main([str(a) for a in args])


def test_plan_example2(tmp_path, capsys):
    assert run("plan", "--partition", "2/9,1/3,1/3,1/9", "--out-dir", tmp_path) == 0
    plan = json.loads((tmp_path / "plan.json").read_text())
    assert plan["S"] == 9 and plan["rowCounts"] == [2, 3, 3, 1]
    assert "rowCounts=[2, 3, 3, 1]" in capsys.readouterr().out


@pytest.mark.parametrize(
    "args, code",
    [
        (["plan"], 2),
        (["plan", "--partition", "1/2,x"], 2),
        (["plan", "--partition", "1/2,1/3"], 3),
        (["plan", "--partition", "1", "--epsilon-pi", "1/2"], 2),
        (["bogus"], 2),
        (["process", "--partition", "1", "--input", "missing.csv", "--bank", "missing.json"], 6),
    ],
)
def test_exit_codes(tmp_path, args, code):
    assert run(*args, "--out-dir", tmp_path) == code


def test_imm_files(tmp_path):
    assert run("imm", "--partition", "2/5,3/5", "--out-dir", tmp_path) == 0
    neg = json.loads((tmp_path / "imm_ch1_min_neg.json").read_text())
    assert neg["ones"] == [[0, 1], [1, 2], [2, 3]]
    summary = json.loads((tmp_path / "imm_summary.json").read_text())
    assert all(s["mappingOk"] for s in summary)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("partition = 2/9,1/3,1/3,1/9\nseed = 4\n")
    assert run("plan", "--config", cfg, "--out-dir", tmp_path) == 0
    assert json.loads((tmp_path / "plan.json").read_text())["S"] == 9
    cfg.write_text("colour = blue\n")
    assert run("plan", "--config", cfg, "--out-dir", tmp_path) == 2


def test_design_eval_process_pipeline(tmp_path):
    code = run("design", *SMALL, "--out-dir", tmp_path)
    assert code in (0, 5)
    for name in ("theta.json", "fir.json", "trace.csv", "design.json", "fir_ch0.csv"):
        assert (tmp_path / name).exists()
    design = json.loads((tmp_path / "design.json").read_text())
    assert design["paraunitarityError"] < 1e-12
    assert (code == 5) == (design["stopReasons"][design["bestRestart"]] == "max_iter")
    assert (tmp_path / "trace.csv").read_text().startswith("restart,iteration,D,gradNorm\n")

    assert run("eval", "--out-dir", tmp_path, "--grid", "256") == 0
    overlay = set()
    for d in (0, 1):
        lines = (tmp_path / f"response_ch2_d{d}.csv").read_text().splitlines()
        assert lines[0] == "omega_pi,magnitude_db,ideal_db,stopband"
        assert len(lines) == 257
        db = np.array([float(l.split(",")[1]) for l in lines[1:]])
        assert db.min() >= -120.0
        overlay |= {float(l.split(",")[2]) for l in lines[1:]}
    assert overlay == {0.0, -60.0}

    assert run("verify", "--out-dir", tmp_path, "--grid", "256") == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["pass"]

    x = np.sin(0.3 * np.arange(203))
    for fmt in ("csv", "f64"):
        write_signal(tmp_path / f"in.{fmt}", x, fmt)
        assert run("process", "--out-dir", tmp_path, "--input", tmp_path / f"in.{fmt}", "--format", fmt) == 0
        out = json.loads((tmp_path / "process.json").read_text())
        assert out["paddedLength"] == 210 and out["reconstructionError"] < 1e-9
        assert (tmp_path / f"channel2.{fmt}").exists()


def test_design_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("design", *SMALL, "--out-dir", a)
    run("design", *SMALL, "--out-dir", b)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_full_band_identity(tmp_path):
    assert run("verify", "--partition", "1", "--out-dir", tmp_path) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    D = [c for c in report["checks"] if c["check"] == "design.objective"][0]["D"]
    assert D == 0.0


def test_bad_bank_file(tmp_path):
    (tmp_path / "theta.json").write_text("{not json")
    assert run("eval", "--partition", "1", "--out-dir", tmp_path) == 6
    (tmp_path / "theta.json").write_text('{"hello": 1}')
    assert run("eval", "--partition", "1", "--out-dir", tmp_path) == 6
