import csv
import json

import numpy as np
import pytest

from rectroom.cli import run


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def cfg1d(tmp_path):
    return write(
        tmp_path / "fig5a.yaml",
        "axes:\n  - {length: 1.0, beta_minus: 0.1+0.1i, beta_plus: 0.1+0.1i}\nsolver: {n_max: 30}\n",
    )


@pytest.fixture
def rigid1d(tmp_path):
    return write(tmp_path / "rigid.yaml", "axes:\n  - {length: 1.0, beta_minus: 0, beta_plus: 0}\n")


@pytest.fixture
def cfg2d(tmp_path):
    return write(
        tmp_path / "room2d.yaml",
        "axes:\n"
        "  - {length: 1.0, beta_minus: {zeta: 10-3i}, beta_plus: {zeta: 6}}\n"
        "  - {length: 1.4, beta_minus: {zeta: 12-5i}, beta_plus: {zeta: 4-4i}}\n",
    )


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def meta(path):
    return json.loads(open(str(path) + ".meta.json").read())


def test_usage_errors(cfg1d, tmp_path, capsys):
    assert run([]) == 1
    assert run(["nosuch"]) == 1
    assert run(["eigenvalues", "--freq", "100"]) == 1
    assert run(["eigenvalues", "--config", str(tmp_path / "missing.yaml"), "--freq", "100"]) == 1
    assert run(["green", "--config", cfg1d, "--freq", "100", "--source", "0.1,0.2", "--grid", "5"]) == 1
    assert run(["tf", "--config", cfg1d, "--source", "0", "--receiver", "0.1", "--freq", "1", "--f-start", "1"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_eigenvalues(tmp_path):
    cfg = write(tmp_path / "b.yaml", "axes:\n  - {length: 1, beta_minus: 0.1+0.1i, beta_plus: 0.2+0.07i}\n")
    out = tmp_path / "eig.csv"
    assert run(["eigenvalues", "--config", cfg, "--freq", "5000", "--nmax", "8", "--out", str(out)]) == 0
    r = rows(out)
    assert sum(row["in_disc"] == "1" for row in r) == 9
    assert all(float(row["residual"]) < 1e-10 for row in r)
    m = meta(out)
    assert m["solver"]["n_max"] == 8 and m["config"]["axes"][0]["length"] == 1
    assert "timings" in m and m["warnings"] == []


def test_numerical_failure_exit_code(rigid1d, capsys):
    code = run(["green", "--config", rigid1d, "--freq", "171.5", "--source", "0.1", "--grid", "5"])
    assert code == 2
    assert "NearResonance" in capsys.readouterr().err


def test_tf_deterministic_across_jobs(rigid1d, tmp_path):
    base = ["tf", "--config", rigid1d, "--source", "0.1", "--receiver", "0.3", "--nmax", "8"]
    base += ["--f-start", "150", "--f-stop", "200", "--f-step", "0.5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(base + ["--jobs", "1", "--out", str(a)]) == 0
    assert run(base + ["--jobs", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    r = rows(a)
    assert len(r) == 101 and r[43]["f_hz"] == "171.5" and r[43]["re_G"] == "nan"
    m = meta(a)
    assert m["failed_frequencies"] == [171.5]
    assert any("NearResonance" in w for w in m["warnings"])


def test_modes(cfg1d, tmp_path):
    out = tmp_path / "modes.csv"
    assert run(["modes", "--config", cfg1d, "--n-range", "1:3", "--out", str(out)]) == 0
    r = rows(out)
    assert [int(x["n"]) for x in r] == [1, 2, 3]
    assert all(round(float(x["df_hz"]), 1) == -11.0 for x in r)


def test_green_reference_compare(cfg2d, tmp_path):
    common = ["--config", cfg2d, "--freq", "500", "--source", "0.1,0.2", "--grid", "21,29"]
    g, ref, cmp_ = tmp_path / "g.csv", tmp_path / "ref.csv", tmp_path / "cmp.csv"
    assert run(["green", *common, "--nmax", "10", "--out", str(g)]) == 0
    assert run(["reference", *common, "--epw", "40", "--out", str(ref)]) == 0
    assert run(["compare", str(g), str(ref), "--source", "0.1,0.2", "--exclude-radius", "0.086", "--out", str(cmp_)]) == 0
    res = {r["metric"]: float(r["value"]) for r in rows(cmp_)}
    assert res["l2_relative_error"] < 0.1 and res["frac"] > 0.99


def test_corner_coordinates(cfg2d, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["green", "--config", cfg2d, "--freq", "300", "--nmax", "6", "--grid", "3,3"]
    assert run(args + ["--source", "0.1,0.2", "--out", str(a)]) == 0
    assert run(args + ["--source", "0.6,0.9", "--corner-coords", "--out", str(b)]) == 0
    ga = [complex(float(r["re_G"]), float(r["im_G"])) for r in rows(a)]
    gb = [complex(float(r["re_G"]), float(r["im_G"])) for r in rows(b)]
    np.testing.assert_allclose(ga, gb, rtol=1e-12)
    assert float(rows(b)[0]["x"]) == 0.0


def test_roots_oracle_and_basis(cfg1d, tmp_path):
    out = tmp_path / "o.csv"
    args = ["roots-oracle", "--config", cfg1d, "--freq", "1000", "--region", "0.05,4.5,-0.5,1", "--out", str(out)]
    assert run(args) == 0
    r = rows(out)
    assert len(r) == meta(out)["winding"] >= 4
    assert all(float(x["multiplicity"]) == 1 for x in r)
    out = tmp_path / "basis.csv"
    assert run(["basis", "--config", cfg1d, "--freq", "1000", "--nmax", "5", "--out", str(out)]) == 0
    assert len(rows(out)) >= 5


def test_selfcheck(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(["selfcheck", "--configs", "3", "--seed", "2", "--out", str(out)]) == 0
    assert [r["status"] for r in rows(out)] == ["PASS", "PASS"]
    assert "PASS" in capsys.readouterr().err
