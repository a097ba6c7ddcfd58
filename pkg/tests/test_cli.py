import numpy as np
import pytest

from phaseflow import io
from phaseflow.cli import RunConfig, build_parser, load_config, main, run_command


def table(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_quantize_compare_exact(capsys):
    assert run_command(["quantize", "--model", "harmonic", "--nmax", "10", "--compare-exact", "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    assert not out.startswith("#")
    header, data = table(out)
    assert header == ["n", "E_semiclassical", "E_exact", "rel_error"]
    np.testing.assert_array_equal(data[:, 0], np.arange(11))
    np.testing.assert_allclose(data[:, 1], np.arange(11), atol=1e-10)
    np.testing.assert_allclose(data[:, 2], np.arange(11) + 0.5, atol=1e-8)


def test_evolve_ground_state_one_period(capsys):
    argv = ["evolve", "--model", "harmonic", "--state", "n=0", "--t", "6.2832", "--dt", "0.001", "--no-timestamp"]
    assert run_command(argv) == 0
    header, data = table(capsys.readouterr().out)
    assert header[:2] == ["t", "l2_difference"]
    assert data[0, 1] <= 1e-5


def test_validate_suite_and_thread_cap(capsys, monkeypatch):
    monkeypatch.setenv("PHASEFLOW_THREADS", "1")
    assert run_command(["validate", "--suite", "core"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS core/") == 4
    assert run_command(["validate", "--suite", "nonsense"]) == 2


def test_validate_reports_failure(capsys, monkeypatch):
    from phaseflow import validation
    monkeypatch.setitem(validation.SUITES, "core", [lambda: (1.0, 0.5)])
    assert run_command(["validate", "--suite", "core"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_lift_project_round_trip_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    common = ["--n-q", "97", "--n-p", "97", "--q-range=-7,7", "--p-range=-7,7", "--n-x", "512"]
    assert run_command(["lift", "--state", "n=1", "--out", str(a)] + common) == 0
    assert run_command(["lift", "--state", "n=1", "--out", str(b)] + common) == 0
    assert a.read_bytes() == b.read_bytes()
    eta = io.read_field(a)
    assert eta.grid.shape == (97, 97)
    capsys.readouterr()
    csv = tmp_path / "psi.csv"
    assert run_command(["project", "--input", str(a), "--out", str(csv), "--no-timestamp", "--n-x", "512"]) == 0
    header, data = io.read_csv(csv)
    assert header == ["x", "re", "im"]
    x = data[:, 0]
    want = np.sqrt(2.0) * x * np.pi ** -0.25 * np.exp(-x**2 / 2)
    assert np.max(np.abs(data[:, 1] - want)) < 1e-6


def test_kernel_and_suppression(capsys):
    assert run_command(["kernel", "--z", "0,0", "--zp", "0.5,0.5", "--sigma", "1", "--no-timestamp"]) == 0
    header, data = table(capsys.readouterr().out)
    assert data[0, -1] == pytest.approx(np.exp(-0.25 / 8 - 0.25 / 2))
    assert run_command(["suppression", "--probe", "1,0", "--sigma", "1", "--offsets", "0,0.5,1", "--no-timestamp"]) == 0
    cap = capsys.readouterr()
    header, data = table(cap.out)
    assert header == ["offset", "ratio", "gaussian"]
    assert data[0, 1] == pytest.approx(1.0)
    assert "fitted_T=" in cap.err


def test_two_dimensional_quantize(capsys):
    assert run_command(["quantize", "--model", "anisotropic2d", "--nmax", "1", "--no-timestamp"]) == 0
    header, data = table(capsys.readouterr().out)
    assert header == ["n1", "n2", "E_semiclassical"]
    np.testing.assert_allclose(data[:, 2], [0.0, 1.0, np.sqrt(2.0)], atol=1e-8)


def test_exit_codes_and_error_format(capsys):
    assert run_command(["bogus"]) == 2
    assert run_command(["quantize", "--frobnicate"]) == 2
    assert run_command(["evolve", "--state", "n=0", "--dt", "-1"]) == 2
    assert "error[UsageError]" in capsys.readouterr().err
    assert run_command(["quantize", "--model", "free", "--nmax", "2"]) == 1
    assert "error[NoClosedOrbit]" in capsys.readouterr().err
    assert run_command(["lift", "--state", "n=0", "--out", "x.bin", "--x-range=-2,2"]) == 1
    assert "error[GridTooCoarse]" in capsys.readouterr().err  # a box this narrow squeezes the levels
    assert run_command(["project", "--input", "/nonexistent/f.bin"]) == 1
    assert "error[InvalidFile]" in capsys.readouterr().err
    assert run_command(["kernel", "--z", "0,0", "--zp", "1,1", "--out", "/nonexistent/dir/k.csv"]) == 1
    assert "error[IOError]" in capsys.readouterr().err
    assert main(["--help"]) == 0


def test_config_file_and_flag_precedence(tmp_path):
    cfg_path = tmp_path / "run.ini"
    cfg_path.write_text("[model]\nkind = quartic\nlam = 0.5\n\n[family]\nhbar = 0.5\n\n[grid]\nq_min = -3\nq_max = 3\nn_q = 33\n\n[run]\ndt = 0.01\n")
    cfg = load_config(str(cfg_path), RunConfig())
    assert cfg.model == "quartic" and cfg.model_params == {"lam": 0.5}
    assert cfg.hbar == 0.5 and cfg.q_range == (-3.0, 3.0) and cfg.n_q == 33 and cfg.dt == 0.01
    from phaseflow.cli import resolve_config
    args = build_parser().parse_args(["quantize", "--config", str(cfg_path), "--hbar", "0.25", "--lam", "2"])
    cfg = resolve_config(args)
    assert cfg.hbar == 0.25 and cfg.model_params["lam"] == 2.0 and cfg.n_q == 33
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\ncolour = blue\n")
    assert run_command(["quantize", "--config", str(bad)]) == 2


def test_validate_all_passes(capsys):
    assert run_command(["validate", "--suite", "all"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.strip().endswith("0 failed")
