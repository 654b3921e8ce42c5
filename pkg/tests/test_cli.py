import json
import math

import numpy as np
import pytest

from kirp.cli import (EXIT_CONJECTURE, EXIT_OK, EXIT_VALIDATION, main)
from kirp.pauli import Sector, build_sector_basis


def test_spectrum_dense(tmp_path):
    code = main(["spectrum", "--tau", "0.45", "--sector", "0-", "--r", "3",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    csv = tmp_path / "spectrum_0-_r3.csv"
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    header_at = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    assert lines[header_at] == "index,re,im,abs,arg,residual"
    n_rows = len(lines) - header_at - 1
    size = build_sector_basis(3, Sector.odd()).size
    assert n_rows == size
    doc = json.loads((tmp_path / "spectrum_0-_r3.json").read_text())
    assert doc["n_eigenvalues"] == size
    assert doc["method"] == "dense"


def test_spectrum_tau_zero_all_ones(tmp_path):
    code = main(["spectrum", "--tau", "0", "--sector", "0.4", "--r", "2",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "spectrum_k=0.4_r2.json").read_text())
    assert doc["lambda1"]["re"] == pytest.approx(1.0, abs=1e-12)
    lines = (tmp_path / "spectrum_k=0.4_r2.csv").read_text().splitlines()
    rows = [l.split(",") for l in lines if not l.startswith("#")][1:]
    assert all(float(r[3]) == pytest.approx(1.0, abs=1e-12) for r in rows)


def test_spectrum_dual_unitary_count(tmp_path):
    code = main(["spectrum", "--tau", str(math.pi / 4), "--hx", "1", "--hz", "0.6",
                 "--sector", "0.6", "--r", "4", "--method", "dense",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "spectrum_k=0.6_r4.csv").read_text().splitlines()
    rows = [l.split(",") for l in lines if not l.startswith("#")][1:]
    nnz = sum(1 for r in rows if float(r[3]) > 1e-8)
    assert nnz == 2 ** (4 - 1)


def test_determinism_byte_identical(tmp_path):
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    for d in (a_dir, b_dir):
        code = main(["spectrum", "--tau", "0.45", "--sector", "0-", "--r", "3",
                     "--method", "krylov", "--n", "4", "--seed", "11",
                     "--outdir", str(d)])
        assert code == EXIT_OK
    assert (a_dir / "spectrum_0-_r3.csv").read_bytes() == \
        (b_dir / "spectrum_0-_r3.csv").read_bytes()


def test_validation_errors(tmp_path):
    assert main(["spectrum", "--sector", "junk", "--r", "3",
                 "--outdir", str(tmp_path)]) == EXIT_VALIDATION
    assert main(["scan", "--k-grid", "", "--r", "3",
                 "--outdir", str(tmp_path)]) == EXIT_VALIDATION
    assert main(["correlate", "--observable", "Z", "--method", "exact",
                 "--outdir", str(tmp_path)]) == EXIT_VALIDATION  # missing --L


def test_svd_check_ok(tmp_path):
    code = main(["svd-check", "--tau", "0.45", "--r", "3", "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "svd_check_r3.json").read_text())
    assert doc["ok"] is True
    assert doc["max_deviation"] < 1e-8
    # an absurd tolerance flags the check as a violation (exit code path)
    code = main(["svd-check", "--tau", "0.45", "--r", "3", "--tol", "1e-30",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_CONJECTURE


def test_params_convert(tmp_path):
    code = main(["params-convert", "--tau", "0.65", "--hx", "0.9", "--hz", "0.8",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "params_convert.json").read_text())
    assert doc["hx_alt"] == pytest.approx(0.61, abs=0.01)
    assert doc["hz_alt"] == pytest.approx(0.46, abs=0.01)
    code = main(["params-convert", "--alt-params", str(doc["J"]), str(doc["hx_alt"]),
                 str(doc["hz_alt"]), "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    back = json.loads((tmp_path / "params_convert.json").read_text())
    assert back["tau"] == pytest.approx(0.65, abs=1e-10)
    assert back["hx"] == pytest.approx(0.9, abs=1e-10)
    assert back["hz"] == pytest.approx(0.8, abs=1e-10)


def test_correlate_truncated_with_fit(tmp_path):
    code = main(["correlate", "--observable", "Z", "--method", "truncated",
                 "--r", "4", "--t-max", "20", "--fit", "exponential",
                 "--fit-window", "5:20", "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    csv = tmp_path / "corr_Z_truncated_r4.csv"
    lines = [l for l in csv.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "t,re,im"
    assert len(lines) == 22
    doc = json.loads(csv.with_suffix(".json").read_text())
    assert doc["fit"]["model"] == "exponential"
    assert 0 < doc["fit"]["rate"] < 1


def test_correlate_exact_small(tmp_path):
    code = main(["correlate", "--observable", "Z", "--method", "exact",
                 "--L", "8", "--t-max", "3", "--n-states", "4",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    lines = [l for l in (tmp_path / "corr_Z_exact_L8.csv").read_text().splitlines()
             if not l.startswith("#")]
    t0 = lines[1].split(",")
    assert float(t0[1]) == pytest.approx(1.0, abs=0.2)


def test_scan_sectors(tmp_path):
    code = main(["scan", "--sectors", "0+,0-", "--r", "3", "--n", "4",
                 "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    lines = [l for l in (tmp_path / "scan.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert lines[0].startswith("k,tau,r,abs_lambda1")
    assert len(lines) == 3


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "job.cfg"
    cfg.write_text("tau = 0.45\nsector = 0-\nr = 3\n")
    code = main(["spectrum", "--config", str(cfg), "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "spectrum_0-_r3.csv").exists()


def test_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("KIRP_OUTDIR", str(tmp_path))
    code = main(["svd-check", "--tau", "0.45", "--r", "3"])
    assert code == EXIT_OK
    assert (tmp_path / "svd_check_r3.json").exists()


def test_plot_renders_png(tmp_path):
    code = main(["spectrum", "--tau", "0.45", "--sector", "0-", "--r", "3",
                 "--plot", "--outdir", str(tmp_path)])
    assert code == EXIT_OK
    png = tmp_path / "spectrum_0-_r3.png"
    assert png.exists() and png.stat().st_size > 1000
