import hashlib

import pytest

from sqbsde.cli import EXIT_CONFIG, main


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_zero_problem_run(tmp_path):
    cfg = _write(tmp_path, 'seed = 1\nroute = "lipschitz"\nproblem = "zero"\nn_paths = 1000\nsteps = 10\n')
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out), "--quiet"]) == 0
    rows = (out / "solution.csv").read_text().splitlines()
    assert rows[0] == "t,Y1_mean,Y1_std,absZ_mean,absZ_max,sqrt_rho_bound"
    for row in rows[1:]:
        assert row.split(",")[1:5] == ["0", "0", "0", "0"] or row.split(",")[4] == "nan"
    cert = (out / "certificate.txt").read_text()
    order = [cert.index(f"[{s}]") for s in ("plan", "verdicts", "z bound", "envelopes", "residuals")]
    assert order == sorted(order)
    assert "bound with 5% slack: holds" in cert
    assert "seed: 1" in (out / "reproducibility.txt").read_text()


def test_outputs_are_byte_identical_across_runs_and_workers(tmp_path):
    base = 'seed = 4\nroute = "lipschitz"\nproblem = "sine-terminal"\nn_paths = 3000\nsteps = 10\n'
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--config", _write(tmp_path, base), "--out", str(a), "--quiet"])
    main(["--config", _write(tmp_path, base + "workers = 3\n", "w.toml"), "--out", str(b), "--quiet"])
    da, db = _digest(a), _digest(b)
    assert da["solution.csv"] == db["solution.csv"]
    assert da["certificate.txt"] == db["certificate.txt"]


def test_flags_override_config(tmp_path):
    cfg = _write(tmp_path, 'seed = 1\nroute = "lipschitz"\nproblem = "zero"\nn_paths = 1000\nsteps = 10\n')
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out), "--seed", "9", "--steps", "5", "--quiet"]) == 0
    repro = (out / "reproducibility.txt").read_text()
    assert "seed: 9" in repro and "steps = 5" in repro
    assert len((out / "solution.csv").read_text().splitlines()) == 7


def test_linear_drift_fbsde_route_reports_residuals(tmp_path):
    cfg = _write(tmp_path, 'seed = 1\nroute = "fbsde-via-bsde"\nproblem = "linear-drift"\nn_paths = 4000\n'
                           'steps = 10\n[basis]\nkind = "polynomial"\ndegree = 1\n')
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out), "--quiet"]) == 0
    cert = (out / "certificate.txt").read_text()
    assert "backward residual" in cert and "forward residual" in cert


def test_typed_errors_give_nonzero_status(tmp_path, capsys):
    cfg = _write(tmp_path, 'seed = 1\nroute = "lipschitz"\nproblem = "zero"\npathz = 3\n')
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "pathz" in capsys.readouterr().err
    cfg = _write(tmp_path, 'seed = 1\nroute = "fbsde-local"\nproblem = "affine-coupled"\nT = 1.0\n'
                           'n_paths = 500\nsteps = 10\nmax_iter = 30\n[problem.params]\n' if False else
                 'seed = 1\nroute = "fbsde-local"\nn_paths = 500\nsteps = 10\nmax_iter = 30\n'
                 '[problem]\nname = "affine-coupled"\nparams = { kappa = 12.0 }\n', "div.toml")
    status = main(["--config", cfg, "--out", str(tmp_path / "d")])
    assert status == 3
    assert "DivergenceError in route fbsde-local" in capsys.readouterr().err


def test_writes_stay_inside_the_output_directory(tmp_path):
    cfg = _write(tmp_path, 'seed = 2\nroute = "reflected-sde"\nn_paths = 50\nsteps = 20\n'
                           '[reflection]\nnormals = [[1.0], [-1.0]]\noffsets = [0.0, -1.0]\nx0 = [0.5]\n')
    before = set(tmp_path.iterdir())
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out), "--quiet"]) == 0
    assert set(tmp_path.iterdir()) - before == {out}
    assert {p.name for p in out.iterdir()} == {"reflected.csv", "certificate.txt", "reproducibility.txt"}
