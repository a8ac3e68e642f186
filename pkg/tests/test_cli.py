import subprocess
import sys

import pytest

from lifshitz.cli import EXIT_FLAGGED, EXIT_OK, EXIT_USAGE, main

FAST = ["--M", "2", "--n", "4", "--samples", "3"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == EXIT_OK
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_rates_bundle(capsys):
    code, out, _ = run(capsys, "rates", "--bundle", "rates(d=1,alpha=1.0,D0=1.0,law=atom(p0=0.36787944117144233,"
                       "slope=0.0))", "--t", "100")
    assert code == EXIT_OK
    row = out.strip().splitlines()[-1].split(",")
    assert float(row[1]) == pytest.approx(10.0) and row[4] == "11" and row[5] == "10"


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", *FAST, "--K", "3")
    lines = out.strip().splitlines()
    assert code == EXIT_OK and lines[0] == "M,sample,k,eigenvalue" and len(lines) == 4
    vals = [float(line.split(",")[3]) for line in lines[1:]]
    assert vals == sorted(vals) and vals[0] >= 0


def test_laplace_stdout(capsys):
    code, out, _ = run(capsys, "--seed", "3", "laplace", *FAST, "--t", "0.5,1")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("M,t,L_hat")
    assert len(out.strip().splitlines()) == 3


def test_laplace_flagged(capsys):
    code, _, _ = run(capsys, "laplace", *FAST, "--n", "16", "--K", "2", "--K-cap", "2", "--t", "0.001")
    assert code == EXIT_FLAGGED


def test_ids_out_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "--out", str(tmp_path), "ids", *FAST, "--lam", "0.5,1.0")
    assert code == EXIT_OK and out == ""
    assert (tmp_path / "ids.csv").read_text().startswith("M,lambda,ell_hat")


def test_config_file(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("phi = stable(alpha=1.0)\nsite = box(h=0.5)\nlaw = power(gamma=1.0)\n"
                    "M = 2\nn = 4\nsamples = 2\nt = 1.0\n")
    code, out, _ = run(capsys, "--config", str(conf), "laplace")
    assert code == EXIT_OK and len(out.strip().splitlines()) == 2


def test_flags_override_config(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("M = 8\nsamples = 2\nt = 1.0\n")
    code, out, _ = run(capsys, "--config", str(conf), "laplace", "--M", "2", "--n", "4")
    assert code == EXIT_OK and out.strip().splitlines()[1].startswith("2,")


def test_study_replay(capsys, tmp_path):
    args = ["study", *FAST, "--t", "10,20", "--lam", "0.5"]
    assert main(["--out", str(tmp_path / "a"), "--seed", "5", *args]) == EXIT_OK
    assert main(["--out", str(tmp_path / "b"), "--seed", "5", "--threads", "2", *args]) == EXIT_OK
    capsys.readouterr()
    for name in ("laplace.csv", "ids.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "metadata.json").exists()


def test_tauber(capsys):
    code, out, _ = run(capsys, "tauber", "--bundle", "rates(d=1,alpha=1.0,D0=1.0,law=atom(p0=0.36787944117144233,"
                       "slope=0.0))")
    assert code == EXIT_OK and out.startswith("# A1=")


@pytest.mark.parametrize("argv", [
    [], ["nosuch"], ["laplace", "--phi", "cauchy(alpha=1)"], ["laplace", "--t", "2,1"],
    ["rates", "--bundle", "rates(d=1)"], ["--config", "/nonexistent/file", "laplace"],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == EXIT_USAGE
    capsys.readouterr()


def test_help(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "laplace" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lifshitz", "verify"], capture_output=True, text=True,
                         timeout=120)
    assert res.returncode == 0 and "PASS" in res.stdout
