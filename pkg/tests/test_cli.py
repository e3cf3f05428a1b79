import json
from pathlib import Path

import numpy as np
import pytest

from hikmeans.cli import main
from hikmeans.core import EmbeddingDataset, load_indices, load_tree, save_dataset
from hikmeans.evalsim import gen_labeled_pool
from hikmeans.rng import stream


@pytest.fixture()
def pool(tmp_path):
    rng = stream(5, "sim.pool")
    data = rng.normal(size=(100, 2)).astype(np.float32)
    path = tmp_path / "pool.hkm"
    save_dataset(EmbeddingDataset(data), path)
    return path


@pytest.fixture()
def cluster_cfg(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("levels: 2\nk: [8, 3]\nm: 2\ninit: kmeanspp\nseed: 11\n")
    return path


def _read_tree_bytes(path: Path) -> bytes:
    blob = path.read_bytes()
    for side in sorted(path.parent.glob(path.name + ".L*")):
        blob += side.read_bytes()
    return blob


def test_cluster_builds_expected_levels(pool, cluster_cfg, tmp_path):
    out = tmp_path / "tree.json"
    assert main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(out)]) == 0
    tree = load_tree(out)
    assert tuple(lv.k for lv in tree.levels) == (8, 3)
    manifest = json.loads((tmp_path / "tree.json.manifest.json").read_text())
    assert manifest["command"] == "cluster"
    assert str(pool) in manifest["inputs"]


def test_cluster_k_exceeds_n_exits_2(pool, tmp_path, capsys):
    cfg = tmp_path / "big.yaml"
    cfg.write_text("k: [500]\n")
    out = tmp_path / "t.json"
    assert main(["cluster", "--config", str(cfg), "--data", str(pool), "--out", str(out)]) == 2
    assert "k exceeds input size" in capsys.readouterr().err
    assert not out.exists()  # nothing partial left behind


def test_cluster_unknown_key_exits_2(pool, tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("k: [4]\nbogus: 1\n")
    assert main(["cluster", "--config", str(cfg), "--data", str(pool), "--out", str(tmp_path / "t.json")]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_cluster_bad_data_exits_3(cluster_cfg, tmp_path, capsys):
    bad = tmp_path / "bad.hkm"
    bad.write_bytes(b"NOPE" + b"\0" * 40)
    assert main(["cluster", "--config", str(cluster_cfg), "--data", str(bad), "--out", str(tmp_path / "t.json")]) == 3
    assert "magic" in capsys.readouterr().err


def test_cluster_rerun_is_bit_identical(pool, cluster_cfg, tmp_path):
    out1, out2 = tmp_path / "r1" / "tree.json", tmp_path / "r2" / "tree.json"
    main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(out1)])
    main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(out2)])
    assert _read_tree_bytes(out1) == _read_tree_bytes(out2)


def test_sample_saturation_and_reproducibility(pool, cluster_cfg, tmp_path):
    tree = tmp_path / "tree.json"
    main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(tree)])
    out = tmp_path / "idx.txt"
    rc = main(["sample", "--tree", str(tree), "--data", str(pool), "--target", "100",
               "--mode", "hier", "--strategy", "r", "--seed", "4", "--out", str(out)])
    assert rc == 0
    assert np.array_equal(load_indices(out), np.arange(100, dtype=np.uint64))

    out2 = tmp_path / "idx2.txt"
    main(["sample", "--tree", str(tree), "--data", str(pool), "--target", "37",
          "--mode", "hier", "--strategy", "r", "--seed", "4", "--out", str(out2)])
    out3 = tmp_path / "idx3.txt"
    main(["sample", "--tree", str(tree), "--data", str(pool), "--target", "37",
          "--mode", "hier", "--strategy", "r", "--seed", "4", "--out", str(out3)])
    assert out2.read_bytes() == out3.read_bytes()


def test_sample_binary_format(pool, cluster_cfg, tmp_path):
    tree = tmp_path / "tree.json"
    main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(tree)])
    out = tmp_path / "idx.u64"
    main(["sample", "--tree", str(tree), "--data", str(pool), "--target", "20",
          "--mode", "flat", "--strategy", "c", "--out", str(out), "--index-format", "u64"])
    idx = load_indices(out, "u64")
    assert abs(int(idx.size) - 20) <= 2  # allocator hits the closest achievable total
    assert idx.dtype == np.uint64


def test_sample_mismatch_exits_4(pool, cluster_cfg, tmp_path, capsys):
    tree = tmp_path / "tree.json"
    main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(tree)])
    other = tmp_path / "other.hkm"
    save_dataset(EmbeddingDataset(np.ones((50, 2), dtype=np.float32)), other)
    rc = main(["sample", "--tree", str(tree), "--data", str(other), "--target", "10",
               "--mode", "flat", "--strategy", "r", "--out", str(tmp_path / "i.txt")])
    assert rc == 4
    assert "dataset" in capsys.readouterr().err


def test_threads_flag_does_not_change_outputs(pool, cluster_cfg, tmp_path):
    outs = []
    for threads, tag in (("1", "t1"), ("8", "t8")):
        tree = tmp_path / tag / "tree.json"
        main(["--threads", threads, "cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(tree)])
        outs.append(_read_tree_bytes(tree))
    assert outs[0] == outs[1]


def test_simulate_csv_schema(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--out", str(out), "--seed", "0", "--svg"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "config_name,seed,kl_to_uniform"
    names = [ln.split(",")[0] for ln in lines[1:]]
    assert names == ["1-level", "2-level", "3-level", "3-level-resample", "random-baseline"]
    assert all(float(ln.split(",")[2]) >= 0 for ln in lines[1:])
    assert out.with_suffix(".svg").exists()
    assert (tmp_path / "sim.csv.manifest.json").exists()


def test_zador_csv_schema(tmp_path):
    out = tmp_path / "z.csv"
    rc = main(["zador", "--out", str(out), "--s", "2", "--samples", "3000", "--clusters", "16", "--svg"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,kl_vs_p,kl_vs_p13,kl_vs_uniform"
    assert len(lines) == 2
    assert out.with_suffix(".svg").exists()


def test_kl_check_reports_no_counterexamples(tmp_path, capsys):
    out = tmp_path / "kl.csv"
    assert main(["kl-check", "--trials", "500", "--out", str(out)]) == 0
    assert "0 violations" in capsys.readouterr().out
    assert out.read_text().splitlines()[0] == "pairs_checked,violations,max_gap"


def test_stats_command(tmp_path):
    data, labels = gen_labeled_pool(3, n_classes=5, alpha=0.8, n=600)
    pool = tmp_path / "pool.hkm"
    save_dataset(data, pool)
    (tmp_path / "labels.txt").write_text("".join(f"{v}\n" for v in labels))
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("k: [30, 10]\nseed: 2\n")
    tree = tmp_path / "tree.json"
    main(["cluster", "--config", str(cfg), "--data", str(pool), "--out", str(tree)])
    out = tmp_path / "stats.csv"
    rc = main(["stats", "--tree", str(tree), "--data", str(pool),
               "--labels", str(tmp_path / "labels.txt"), "--out", str(out), "--svg"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "class_id,class_size,cluster_count,mean_cluster_size"
    assert len(lines) == 6
    fits = (tmp_path / "stats.fits.csv").read_text().splitlines()
    assert fits[0] == "count_slope,count_intercept,size_slope,size_intercept"
    assert len(fits) == 2
    assert out.with_suffix(".svg").exists()


def test_env_threads_fallback(pool, cluster_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("HIKM_THREADS", "1")
    out = tmp_path / "tree.json"
    assert main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(out)]) == 0
    monkeypatch.setenv("HIKM_THREADS", "frogs")
    assert main(["cluster", "--config", str(cluster_cfg), "--data", str(pool), "--out", str(out)]) == 2
