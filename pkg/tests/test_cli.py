from __future__ import annotations

import csv
import io
import json
import math

import pytest
import yaml

from wormproj.cli import EXIT_ACCURACY, EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main

POINTS_HEADER = "z1_re,z1_im,z2_re,z2_im,w1_re,w1_im,w2_re,w2_im\n"


def write_config(tmp_path, **data):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_residues_table_and_sidecar(tmp_path):
    out = tmp_path / "res.csv"
    assert main(["residues", "--output", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert [int(r["k"]) for r in rows] == [1, 2, 3]
    for r in rows:
        assert r["status"] == "ok"
        assert float(r["combined_abs"]) < 1e-9 * abs(float(r["bergman_im"]))
    meta = json.loads((tmp_path / "res.csv.meta.json").read_text())
    assert meta["correction_sign"] == -1
    assert meta["config"]["beta"] == 2.0
    assert "numpy" in meta["versions"]


def test_degenerate_beta_refused(tmp_path, capsys):
    cfg = write_config(tmp_path, beta=math.pi)
    assert main(["residues", "--config", cfg]) == EXIT_USAGE
    assert "allow-degenerate" in capsys.readouterr().err
    out = tmp_path / "deg.csv"
    with pytest.warns(Warning):
        assert main(["residues", "--config", cfg, "--allow-degenerate", "--output", str(out)]) == EXIT_OK
    assert {r["status"] for r in read_csv(out)} == {"degenerate"}


@pytest.mark.parametrize(
    "data",
    [{"nonsense": 1}, {"grid": {"bogus": 2}}, {"beta": 1.0}, {"grid": {"x_max": -1.0}}, {"grid": [1, 2]}],
)
def test_bad_configuration_is_a_usage_error(tmp_path, data):
    assert main(["residues", "--config", write_config(tmp_path, **data)]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["kernel", "bergman", str(tmp_path / "missing.csv")]) == EXIT_USAGE
    bad = tmp_path / "bad.csv"
    bad.write_text("z1_re,z1_im\n1,2\n")
    assert main(["kernel", "bergman", str(bad)]) == EXIT_USAGE
    with pytest.raises(UsageError):
        RunConfig.from_mapping({"grid": {"n_theta": "x"}}).grid  # noqa: B018


def test_kernel_command(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text(
        POINTS_HEADER
        + "1.0,0.2,1.05,0.1,1.0,0.2,1.05,0.1\n"
        + "0.5,0.1,1.0,0.0,0.8,-0.2,0.9,0.3\n"
        + "0.8,-0.2,0.9,0.3,0.5,0.1,1.0,0.0\n"
        + "-1.0,0.0,1.0,0.0,0.5,0.1,1.0,0.0\n"
    )
    out = tmp_path / "k.csv"
    assert main(["kernel", "bergman", str(pts), "--output", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert [r["status"] for r in rows] == ["ok", "ok", "ok", "outside"]
    # the diagonal is positive and real
    assert float(rows[0]["value_re"]) > 0 and abs(float(rows[0]["value_im"])) < 1e-12
    # swapping z and w conjugates the kernel
    assert float(rows[1]["value_re"]) == pytest.approx(float(rows[2]["value_re"]), rel=1e-10)
    assert float(rows[1]["value_im"]) == pytest.approx(-float(rows[2]["value_im"]), rel=1e-10)
    assert math.isnan(float(rows[3]["value_re"]))


def test_kernel_empty_input(tmp_path, capsys):
    pts = tmp_path / "empty.csv"
    pts.write_text(POINTS_HEADER)
    assert main(["kernel", "correction", str(pts)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.strip().split(",")[-1] == "status"
    assert len(out.strip().splitlines()) == 1


def test_norms_command(tmp_path):
    cfg = write_config(
        tmp_path, j_list=[-1, 0, 1], grid={"x_max": 8.0, "x_nodes": 8, "u_panels": 4, "u_nodes": 8, "s_nodes": 10}
    )
    out = tmp_path / "n.csv"
    assert main(["norms", "--config", cfg, "--output", str(out), "--seed", "3"]) == EXIT_OK
    rows = read_csv(out)
    assert [int(r["j"]) for r in rows] == [-1, 0, 1]
    env = {int(r["j"]): float(r["envelope"]) for r in rows}
    a = 2.0 - math.pi / 2
    assert env[-1] == a
    assert env[0] == math.sinh(a)
    assert env[1] == math.sinh(2 * a) / 2
    meta = json.loads((tmp_path / "n.csv.meta.json").read_text())
    assert meta["config"]["seed"] == 3
    assert meta["grid"]["n_theta"] >= 4
    assert meta["C_slack"] == pytest.approx(max(float(r["ratio"]) for r in rows))


def test_norms_requires_modes(tmp_path):
    assert main(["norms", "--config", write_config(tmp_path, j_list=[])]) == EXIT_USAGE


def test_verify_passing_subset(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["verify", "--config", write_config(tmp_path, only=[1, 2]), "--output", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert {r["criterion"] for r in rows} == {"1", "2"}
    assert all(r["status"] == "pass" for r in rows)
    meta = json.loads((tmp_path / "v.csv.meta.json").read_text())
    assert meta["correction_sign"] == -1
    assert meta["criteria"] == {"1": True, "2": True}


def test_verify_reports_failures(tmp_path):
    cfg = write_config(tmp_path, only=[3], supplementary=False)
    assert main(["verify", "--config", cfg]) == EXIT_FAIL


def test_verify_tightened_tolerance_is_an_accuracy_failure(tmp_path, capsys):
    cfg = write_config(tmp_path, only=[6], tol=1e-6)
    assert main(["verify", "--config", cfg]) == EXIT_ACCURACY
    table = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert table[0]["status"] == "accuracy"


def test_determinism(tmp_path):
    cfg = write_config(tmp_path, j_list=[0], grid={"x_max": 6.0, "x_nodes": 6, "u_panels": 3, "u_nodes": 6, "s_nodes": 6})
    outs = []
    for name in ("a.csv", "b.csv"):
        main(["norms", "--config", cfg, "--output", str(tmp_path / name), "--seed", "11"])
        outs.append((tmp_path / name).read_text())
    assert outs[0] == outs[1]
