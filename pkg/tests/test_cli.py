import subprocess
import sys

import numpy as np
import pytest

from prdim.cli import main
from prdim.estimator import Correction, estimate_dimensionality
from prdim.io import read_table, write_npy
from prdim.synth import PopulationSpec, generate


@pytest.fixture
def matrix(tmp_path):
    phi = generate(PopulationSpec("linear", 3, noise_std=0.2), 40, 25, seed=1)
    p = tmp_path / "phi.csv"
    np.savetxt(p, phi, fmt="%.17g", delimiter=",")
    return p, phi


def run(*argv):
    return main([str(a) for a in argv])


def test_estimate(matrix, tmp_path):
    path, phi = matrix
    out = tmp_path / "e.csv"
    assert run("estimate", "--input", path, "--out", out) == 0
    meta, header, rows = read_table(out)
    assert header[:4] == ["variant", "centering", "noise_corrected", "value"]
    assert meta["rows"] == "40" and meta["columns"] == "25" and "config_hash" in meta
    assert [r[0] for r in rows] == [c.value for c in Correction]
    both = estimate_dimensionality(phi).value
    assert float(rows[3][3]) == both


def test_estimate_trial_pair_and_weights(matrix, tmp_path):
    path, phi = matrix
    t2 = tmp_path / "t2.npy"
    write_npy(t2, phi + 0.1)
    w = tmp_path / "w.csv"
    np.savetxt(w, np.linspace(0.5, 1.5, 40))
    out = tmp_path / "e.csv"
    code = run("estimate", "--input", path, "--trial2", t2, "--weights", w, "--variant", "both", "--out", out)
    assert code == 0
    _, _, rows = read_table(out)
    assert len(rows) == 1 and rows[0][2] == "true"


def test_stdout(matrix, capsys):
    path, _ = matrix
    assert run("estimate", "--input", path, "--variant", "naive") == 0
    text = capsys.readouterr().out
    assert text.startswith("# tool: prdim")


def test_sweep_rows_and_plot(matrix, tmp_path):
    path, _ = matrix
    out, svg = tmp_path / "s.csv", tmp_path / "s.svg"
    code = run("sweep", "--input", path, "--grid-p", "10,20", "--grid-q", "25", "--reps", "2", "--out", out, "--plot", svg)
    assert code == 0
    _, _, rows = read_table(out)
    assert len(rows) == 2 * 2 * 4
    assert svg.read_text().lstrip().startswith("<?xml")


def test_two_cell_sweep(matrix, tmp_path):
    path, _ = matrix
    out = tmp_path / "s.csv"
    assert run("sweep", "--input", path, "--grid-p", "10,20", "--grid-q", "25", "--variant", "col", "--out", out) == 0
    assert len(read_table(out)[2]) == 2


def test_determinism(matrix, tmp_path):
    path, _ = matrix
    outs = []
    for i in range(2):
        out = tmp_path / f"s{i}.csv"
        run("sweep", "--input", path, "--grid-p", "10,30", "--reps", "3", "--seed", "9", "--out", out)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_local(tmp_path):
    phi = generate(PopulationSpec("rff", 2), 80, 30, seed=0)
    p = tmp_path / "r.npy"
    write_npy(p, phi)
    out = tmp_path / "l.csv"
    assert run("local", "--input", p, "--variant", "all", "--metric", "euclidean", "--out", out) == 0
    meta, header, rows = read_table(out)
    assert "twonn" in meta and header[0] == "radius"
    assert len(rows) == 8 * 4
    out2 = tmp_path / "l2.csv"
    assert run("local", "--input", p, "--radii", "100,3000", "--out", out2) == 0
    assert [float(r[0]) for r in read_table(out2)[2]] == [100.0, 3000.0]


def test_synth_round_trip(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.npy"
    code = run("synth", "--kind", "rff", "--latent-dim", "2", "--noise-std", "0.1", "--P", 20, "--Q", 10, "--seed", 4, "--out", a, "--out2", b)
    assert code == 0
    from prdim.io import ingest
    from prdim.synth import generate_trial_pair

    tp = generate_trial_pair(PopulationSpec("rff", 2, noise_std=0.1), 20, 10, 4)
    assert np.array_equal(ingest(a), tp.trial1)
    assert np.array_equal(ingest(b), tp.trial2)


def test_align(tmp_path, rng):
    paths = []
    M = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 8))
    for i in range(2):
        p = tmp_path / f"m{i}.csv"
        np.savetxt(p, M, fmt="%.17g", delimiter=",")
        paths += ["--input", p]
    out = tmp_path / "a.csv"
    assert run("align", *paths, "--out", out) == 0
    rows = {r[0]: r for r in read_table(out)[2]}
    assert abs(float(rows["exd"][3])) <= 1e-9


def test_bias_predict(tmp_path):
    out = tmp_path / "b.csv"
    code = run("bias-predict", "--latent-dim", "5", "--ref-size", 300, "--grid-p", "100,200", "--out", out)
    assert code == 0
    meta, header, rows = read_table(out)
    assert header == ["P", "Q", "variant", "bias", "variance"]
    assert len(rows) == 2 * 2 * 2
    assert float(meta["gamma_pop"]) > 1


def test_exit_codes(tmp_path, matrix, capsys):
    path, _ = matrix
    assert run("estimate", "--input", tmp_path / "missing.csv") == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,nan\n")
    assert run("estimate", "--input", bad) == 2
    assert "row=1, col=1" in capsys.readouterr().err
    assert run("sweep", "--input", path, "--grid-p", "400") == 3
    tiny = tmp_path / "tiny.csv"
    tiny.write_text("1,2\n3,4\n")
    assert run("estimate", "--input", tiny, "--variant", "row") == 3
    assert run("estimate", "--bogus") == 2
    assert run("--version") == 0


def test_config_file_flags_win(matrix, tmp_path):
    path, _ = matrix
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# comment\ninput = {path}\nvariant = col\ncentering = none\n")
    out = tmp_path / "e.csv"
    assert run("estimate", "--config", cfg, "--variant", "naive", "--out", out) == 0
    _, _, rows = read_table(out)
    assert [(r[0], r[1]) for r in rows] == [("naive", "none")]
    cfg.write_text("nonsense = 1\n")
    assert run("estimate", "--config", cfg, "--input", path) == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "prdim.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "output columns" in res.stdout and "bias-predict" in res.stdout
