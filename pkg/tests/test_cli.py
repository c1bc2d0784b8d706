"""Command-line behavior, exercised in process through main(argv)."""

import numpy as np
import pytest

from qpat.cli import main


def _write_config(path, **extra):
    base = dict(grid_size=17, final_time=1.0, kappa=0.5, seed=3,
                outer_cap=2, cg_cap=3, landweber_iters=5)
    base.update(extra)
    with open(path, "w") as fh:
        for key, value in base.items():
            fh.write(f"{key} = {value}\n")
    return str(path)


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "FAIL" not in out


def test_synthesize_writes_deterministic_archive(tmp_path, capsys):
    cfg = _write_config(tmp_path / "run.cfg")
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["synthesize", "--config", cfg, "--out", str(a)]) == 0
    assert main(["synthesize", "--config", cfg, "--out", str(b)]) == 0
    for name in ("data.qpat1", "data.meta", "truth_speed.field",
                 "truth_absorption.field"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # the saved config reflects the effective out_dir, so compare it
    # modulo that one key
    strip = lambda p: [ln for ln in (p / "config.txt").read_text()
                       .splitlines() if not ln.startswith("out_dir")]
    assert strip(a) == strip(b)
    c = tmp_path / "c"
    assert main(["synthesize", "--config", cfg, "--seed", "4",
                 "--out", str(c)]) == 0
    assert (a / "data.qpat1").read_bytes() != (c / "data.qpat1").read_bytes()


def test_invert_lm_reports_errors_against_truth(tmp_path, capsys):
    cfg = _write_config(tmp_path / "run.cfg", kappa=0.0)
    data_dir = tmp_path / "data"
    out = tmp_path / "recon"
    assert main(["synthesize", "--config", cfg,
                 "--out", str(data_dir)]) == 0
    assert main(["invert", str(data_dir / "data.qpat1"), "--config", cfg,
                 "--out", str(out)]) == 0
    report = {}
    for line in (out / "report.txt").read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            report[key.strip()] = value.strip()
    assert report["algorithm"] == "lm"
    assert float(report["speed_error"]) >= 0.0
    assert float(report["absorption_error"]) >= 0.0
    for name in ("speed.field", "speed.pgm", "absorption.field",
                 "absorption.pgm", "convergence.log"):
        assert (out / name).exists()
    log = (out / "convergence.log").read_text().splitlines()
    assert log[0].startswith("#")
    assert len(log) == 4  # outer_cap 2 plus terminal entry plus header


def test_invert_landweber_logs_residuals(tmp_path):
    cfg = _write_config(tmp_path / "run.cfg", algorithm="landweber",
                        kappa=0.0)
    data_dir = tmp_path / "data"
    out = tmp_path / "recon"
    assert main(["synthesize", "--config", cfg,
                 "--out", str(data_dir)]) == 0
    assert main(["invert", str(data_dir / "data.qpat1"), "--config", cfg,
                 "--out", str(out)]) == 0
    text = (out / "report.txt").read_text()
    assert "algorithm = landweber" in text
    assert "step_size = " in text
    lines = (out / "convergence.log").read_text().splitlines()
    assert len(lines) == 7  # header plus landweber_iters + 1 residuals


def test_invert_grid_mismatch_is_config_error(tmp_path, capsys):
    cfg = _write_config(tmp_path / "run.cfg")
    data_dir = tmp_path / "data"
    assert main(["synthesize", "--config", cfg,
                 "--out", str(data_dir)]) == 0
    code = main(["invert", str(data_dir / "data.qpat1"), "--config", cfg,
                 "--grid", "21", "--out", str(tmp_path / "r")])
    assert code == 1
    assert "does not match" in capsys.readouterr().err


def test_invert_missing_archive(tmp_path, capsys):
    code = main(["invert", str(tmp_path / "nothing.qpat1"),
                 "--out", str(tmp_path / "r")])
    assert code == 3


def test_invert_corrupt_archive(tmp_path, capsys):
    bad = tmp_path / "bad.qpat1"
    bad.write_bytes(b"not an archive at all, far too short")
    code = main(["invert", str(bad), "--out", str(tmp_path / "r")])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_experiment_rejects_bad_id(capsys):
    assert main(["experiment", "6"]) == 1
    assert "1..5" in capsys.readouterr().err


def test_experiment_rejects_kappa_flag(capsys):
    assert main(["experiment", "1", "--kappa", "0.5"]) == 1


def test_experiment_rejects_bad_override(tmp_path, capsys):
    cfg = tmp_path / "o.cfg"
    cfg.write_text("outer_cap = 0\n")
    assert main(["experiment", "1", "--config", str(cfg)]) == 1
    cfg.write_text("cg_cap = soon\n")
    assert main(["experiment", "1", "--config", str(cfg)]) == 1


def test_experiment_small_run_is_deterministic(tmp_path, capsys):
    cfg = tmp_path / "caps.cfg"
    cfg.write_text("outer_cap = 1\ncg_cap = 2\n")
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        code = main(["experiment", "1", "--config", str(cfg),
                     "--grid", "17", "--seed", "7", "--out", str(out)])
        assert code == 0
    names = ["summary.txt", "truth_speed.field", "truth_absorption.field"]
    names += [f"kappa-{k}/{f}" for k in ("0", "0.5", "1")
              for f in ("speed.field", "absorption.field",
                        "convergence.log")]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    summary = (a / "summary.txt").read_text()
    assert "# study 1 summary" in summary
    assert "grid_size = 17" in summary


def test_threads_flag_validation(capsys):
    assert main(["selftest", "--threads", "0"]) == 1
    assert "--threads" in capsys.readouterr().err
