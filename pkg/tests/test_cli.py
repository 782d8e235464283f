import csv
import json

import numpy as np
import pytest

from cornerwave import io
from cornerwave.cli import main
from cornerwave.synthetic import gaussian_dataset


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "x.csv"
    io.write_dataset(path, gaussian_dataset(500, [5.0, -2.0], [[2.0, 0.6], [0.6, 1.0]],
                                            seed=3, columns=["a", "b"]))
    return path


def _csv(path):
    return io.read_dataset(path).values


def test_gen_sequential(tmp_path, data_csv, capsys):
    out = tmp_path / "s"
    assert main(["gen", "--input", str(data_csv), "--levels", "1,4",
                 "--mode", "sequential", "--seed", "7", "--out", str(out)]) == 0
    assert (out / "copy_1.0.csv").exists() and (out / "copy_4.0.csv").exists()
    meta = json.loads((out / "session.json").read_text())
    assert meta["levels"] == [1.0, 4.0] and meta["scheme"] == "cornerwave"
    printed = capsys.readouterr().out
    assert "0.500000" in printed and "0.800000" in printed
    x = _csv(data_csv)
    noise = _csv(out / "noise_1.0.csv")
    np.testing.assert_array_equal(_csv(out / "copy_1.0.csv") - x, noise)


def test_gen_ondemand_between_levels(tmp_path, data_csv):
    out = tmp_path / "s"
    assert main(["gen", "--input", str(data_csv), "--levels", "1,4",
                 "--seed", "7", "--out", str(out)]) == 0
    before = (out / "copy_1.0.csv").read_bytes()
    assert main(["gen", "--input", str(data_csv), "--levels", "2",
                 "--mode", "ondemand", "--out", str(out)]) == 0
    meta = json.loads((out / "session.json").read_text())
    assert meta["levels"] == [1.0, 4.0, 2.0]
    assert meta["sorted_order"] == [0, 2, 1]
    assert (out / "copy_1.0.csv").read_bytes() == before
    assert (out / "copy_2.0.csv").exists()


def test_gen_refuses_to_overwrite_session(tmp_path, data_csv):
    out = tmp_path / "s"
    args = ["gen", "--input", str(data_csv), "--levels", "1", "--out", str(out)]
    assert main(args) == 0
    assert main(args) == 2


def test_gen_ondemand_needs_session(tmp_path, data_csv, capsys):
    assert main(["gen", "--input", str(data_csv), "--levels", "2",
                 "--mode", "ondemand", "--out", str(tmp_path / "none")]) == 2
    assert "session" in capsys.readouterr().err


def test_gen_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,oops\n")
    assert main(["gen", "--input", str(bad), "--levels", "1", "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert ":3:" in err and "'b'" in err


def test_gen_missing_file(tmp_path):
    assert main(["gen", "--input", str(tmp_path / "nope.csv"), "--levels", "1",
                 "--out", str(tmp_path / "o")]) == 3


def test_gen_indefinite_model(tmp_path, data_csv):
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"mu": [0, 0], "cov": [[1, 2], [2, 1]]}))
    assert main(["gen", "--input", str(data_csv), "--levels", "1", "--model", str(model),
                 "--out", str(tmp_path / "o")]) == 4


def test_gen_bad_level(tmp_path, data_csv):
    assert main(["gen", "--input", str(data_csv), "--levels", "1,-2",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["gen", "--input", str(data_csv), "--levels", "1,1", "--mode", "independent",
                 "--out", str(tmp_path / "o2")]) == 2


def test_gen_synthetic_and_random_levels(tmp_path):
    out = tmp_path / "s"
    assert main(["gen", "--synthetic", "300", "--random-levels", "3,0.25,1",
                 "--seed", "2", "--out", str(out)]) == 0
    assert _csv(out / "original.csv").shape == (300, 2)
    assert len(list(out.glob("copy_*.csv"))) == 3


def test_attack_command(tmp_path, data_csv):
    out = tmp_path / "s"
    main(["gen", "--input", str(data_csv), "--levels", "0.5,2", "--out", str(out)])
    rep = tmp_path / "r"
    assert main(["attack", "--session", str(out), "--subset", "1,2;2",
                 "--knowledge", "both", "--samples", "200", "--out", str(rep)]) == 0
    data = json.loads((rep / "attack_report.json").read_text())
    assert len(data["records"]) == 4
    assert {tuple(r["subset"]) for r in data["records"]} == {(1, 2), (2,)}
    perfect = [r for r in data["records"] if r["knowledge"] == "perfect"]
    assert all(r["analytic_pass"] for r in perfect)
    rows = list(csv.DictReader(open(rep / "attack_report.csv")))
    assert {r["attribute"] for r in rows} == {"a", "b"}
    # supplying the original data gives the same report as owner-side recovery
    rep2 = tmp_path / "r2"
    assert main(["attack", "--session", str(out), "--input", str(data_csv), "--subset", "1,2;2",
                 "--knowledge", "both", "--samples", "200", "--out", str(rep2)]) == 0
    got = json.loads((rep2 / "attack_report.json").read_text())
    for a, b in zip(data["records"], got["records"]):
        assert a["empirical_distortion"] == pytest.approx(b["empirical_distortion"], rel=1e-12)


def test_attack_bad_subset(tmp_path, data_csv):
    out = tmp_path / "s"
    main(["gen", "--input", str(data_csv), "--levels", "0.5,2", "--out", str(out)])
    assert main(["attack", "--session", str(out), "--subset", "3",
                 "--out", str(tmp_path / "r")]) == 2
    assert main(["attack", "--session", str(out), "--subset", "x",
                 "--out", str(tmp_path / "r")]) == 2


def test_exp1_small(tmp_path):
    assert main(["exp1", "--m", "4", "--t", "2000", "--seed", "1", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "exp1.csv")))
    assert [int(r["copies"]) for r in rows] == [1, 2, 3, 4]
    for key in ("indep_perfect", "cw_perfect", "cw_least_perturbed", "cw_partial_300N2"):
        assert all(0 < float(r[key]) < 1 for r in rows)


def test_exp2_small(tmp_path):
    assert main(["exp2", "--m-list", "4,8", "--t", "500", "--reps", "1",
                 "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "exp2.csv")))
    assert [(int(r["M"]), int(r["L"])) for r in rows] == [(4, 1), (4, 2), (4, 3),
                                                          (8, 2), (8, 4), (8, 6)]
    slopes = list(csv.DictReader(open(tmp_path / "exp2_slopes.csv")))
    assert [s["fraction"] for s in slopes] == ["1/4", "1/2", "3/4"]


@pytest.mark.parametrize("lognormal", [False, True])
def test_synth_statistics(tmp_path, lognormal):
    path = tmp_path / "c.csv"
    args = ["synth", "--t", "20000", "--seed", "4", "--out", str(path)]
    assert main(args + (["--lognormal"] if lognormal else [])) == 0
    ds = io.read_dataset(path)
    assert ds.columns == ["Age", "Income"]
    np.testing.assert_allclose(ds.values.mean(axis=0), [50.06, 16.57], rtol=0.01)
    np.testing.assert_allclose(ds.values.var(axis=0, ddof=1), [303.03, 219.92], rtol=0.01)
    if lognormal:
        skew = ((ds.values - ds.values.mean(0)) ** 3).mean(0) / ds.values.std(0) ** 3
        assert np.all(skew > 0.5)


def test_cli_deterministic(tmp_path, data_csv):
    for run in ("a", "b"):
        main(["gen", "--input", str(data_csv), "--levels", "0.5,2,1", "--mode", "sequential",
              "--seed", "9", "--out", str(tmp_path / run)])
        main(["gen", "--input", str(data_csv), "--levels", "0.7", "--mode", "ondemand",
              "--out", str(tmp_path / run)])
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".csv", ".json"))
    assert len(names) == 9
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
