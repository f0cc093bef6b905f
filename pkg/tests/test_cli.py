import xml.etree.ElementTree as ET
from collections import Counter

import numpy as np
import pytest

from song import load_csv, load_model
from song.cli import main
from song.evaluation import BlobSpec, make_blobs
from song.io import encode_idx, write_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    pairs = dict(l.split("=", 1) for l in out.splitlines() if "=" in l)
    return code, pairs, err


@pytest.fixture
def blob_csv(tmp_path):
    d = make_blobs(BlobSpec(n_clusters=5, cluster_std=0.5, dims=10, points_per_cluster=40, seed=2))
    paths = {}
    for name, mask in (("all", d.labels >= 0), ("old", d.labels < 3), ("new", d.labels >= 3)):
        p = tmp_path / f"{name}.csv"
        write_csv(str(p), type(d)(d.rows[mask], d.labels[mask]))
        paths[name] = p
    return paths


def test_fit_and_determinism(capsys, tmp_path, blob_csv):
    m1, m2 = tmp_path / "a.song", tmp_path / "b.song"
    code, out, _ = run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m1, "--seed", 3,
                       "--report", tmp_path / "r.json")
    assert code == 0 and m1.exists() and (tmp_path / "r.json").exists()
    assert out["terminated_early"] == "true" or int(out["epochs_run"]) == 100
    run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m2, "--seed", 3)
    assert m1.read_bytes() == m2.read_bytes()


def test_fit_set_overrides(capsys, tmp_path, blob_csv):
    m = tmp_path / "m.song"
    code, out, _ = run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m,
                       "--set", "t_max=3", "--set", "theta_g=1e9")
    assert code == 0 and int(out["epochs_run"]) <= 3
    assert load_model(str(m)).hyper.t_max == 3
    code, _, err = run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m,
                       "--set", "bogus=1")
    assert code == 1 and "bogus" in err


def test_fit_pca_on_idx(capsys, tmp_path, rng):
    imgs = rng.integers(0, 256, (60, 28, 28), dtype=np.uint8)
    (tmp_path / "x-ubyte").write_bytes(encode_idx(imgs))
    m = tmp_path / "m.song"
    code, out, _ = run(capsys, "fit", "--data", tmp_path / "x-ubyte", "--pca", 20,
                       "--model-out", m, "--set", "t_max=5")
    assert code == 0 and out["input_dim"] == "20"
    assert load_model(str(m)).projection[1].shape == (20, 784)


def test_grow_empty_and_heterogeneous(capsys, tmp_path, blob_csv):
    m = tmp_path / "m.song"
    run(capsys, "fit", "--data", blob_csv["old"], "--model-out", m)
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(f"x{i + 1}" for i in range(10)) + "\n")
    code, out, _ = run(capsys, "grow", "--model-in", m, "--data", empty, "--model-out",
                       tmp_path / "same.song")
    assert code == 0 and float(out["cdy_mean"]) == 0.0 and out["epochs_run"] == "0"
    assert (tmp_path / "same.song").read_bytes() == m.read_bytes()
    code, out, _ = run(capsys, "grow", "--model-in", m, "--data", blob_csv["new"],
                       "--model-out", tmp_path / "g.song")
    assert code == 0 and int(out["growth_events"]) >= 1


def test_chained_grow_equals_session(capsys, tmp_path, blob_csv):
    from song import HyperParams, fit, init_model, partial_fit
    from song.io import dumps_model
    rows = load_csv(str(blob_csv["all"]), has_header=True, label_column="label").rows
    parts = [rows[:80], rows[80:140], rows[140:]]
    for i, part in enumerate(parts):
        write_csv(str(tmp_path / f"p{i}.csv"), part)
    run(capsys, "fit", "--data", tmp_path / "p0.csv", "--model-out", tmp_path / "c0.song",
        "--seed", 5)
    for i in (1, 2):
        run(capsys, "grow", "--model-in", tmp_path / f"c{i - 1}.song", "--data",
            tmp_path / f"p{i}.csv", "--model-out", tmp_path / f"c{i}.song")
    m = init_model(10, 2, HyperParams(seed=5), (parts[0].min(0), parts[0].max(0)))
    fit(m, parts[0])
    partial_fit(m, parts[1])
    partial_fit(m, parts[2])
    assert (tmp_path / "c2.song").read_bytes() == dumps_model(m)


def test_eval(capsys, tmp_path, blob_csv):
    m = tmp_path / "m.song"
    run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m)
    code, out, _ = run(capsys, "eval", "--model-in", m, "--data", blob_csv["all"], "--k", 5)
    assert code == 0 and float(out["ami_mean"]) >= 0.99
    assert len(out["ami_samples"].split(",")) == 5
    code, out, _ = run(capsys, "eval", "--model-in", m, "--data", blob_csv["all"], "--k", 1,
                       "--repeats", 2)
    assert abs(float(out["ami_mean"])) < 1e-9


def test_eval_without_labels_fails(capsys, tmp_path, blob_csv, rng):
    m = tmp_path / "m.song"
    run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m, "--set", "t_max=3")
    write_csv(str(tmp_path / "u.csv"), rng.normal(size=(5, 10)))
    code, _, err = run(capsys, "eval", "--model-in", m, "--data", tmp_path / "u.csv")
    assert code == 1 and err.startswith("error:")


def test_embed_and_plot(capsys, tmp_path, blob_csv):
    m, e = tmp_path / "m.song", tmp_path / "e.csv"
    run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m)
    code, out, _ = run(capsys, "embed", "--model-in", m, "--data", blob_csv["all"], "--out", e)
    assert code == 0 and out["rows"] == "200"
    s1, s2 = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run(capsys, "plot", "--embedding", e, "--svg-out", s1)[0] == 0
    run(capsys, "plot", "--model-in", m, "--data", blob_csv["all"], "--svg-out", s2)
    assert s1.read_bytes() == s2.read_bytes()
    root = ET.fromstring(s1.read_text().split("\n", 1)[1])
    fills = Counter(c.get("fill") for c in root.iter("{http://www.w3.org/2000/svg}circle"))
    assert sorted(fills.values()) == [40] * 5


def test_plot_rejects_high_dim(capsys, tmp_path, blob_csv):
    out = tmp_path / "x.svg"
    code, _, err = run(capsys, "plot", "--embedding", blob_csv["all"], "--svg-out", out)
    assert code == 1 and "2-d" in err and not out.exists()


def test_dimension_mismatch_exit(capsys, tmp_path, blob_csv, rng):
    m = tmp_path / "m.song"
    run(capsys, "fit", "--data", blob_csv["all"], "--model-out", m, "--set", "t_max=2")
    write_csv(str(tmp_path / "w.csv"), rng.normal(size=(4, 3)))
    code, _, err = run(capsys, "grow", "--model-in", m, "--data", tmp_path / "w.csv",
                       "--model-out", tmp_path / "o.song")
    assert code == 1 and not (tmp_path / "o.song").exists()


def test_missing_file_exit(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--data", tmp_path / "nope.csv", "--model-out",
                       tmp_path / "m.song")
    assert code == 1 and "error:" in err


def test_blobs(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--n-clusters", 10, "--std", 4, "--dims", 60, "--points-per-cluster", 20, "--seed", 1]
    assert run(capsys, "blobs", *args, "--out", a)[0] == 0
    run(capsys, "blobs", *args, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    d = load_csv(str(a), has_header=True, label_column="label")
    assert len(np.unique(d.labels)) == 10
    ref = make_blobs(BlobSpec(10, 4.0, 60, 20, 1))
    assert np.array_equal(d.rows, ref.rows) and np.array_equal(d.labels, ref.labels)
