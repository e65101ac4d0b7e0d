import json
import pickle
import shutil

import numpy as np
import pytest
import scipy.sparse as sp

from dropedgepp.data import (
    DATA_ENV,
    DatasetError,
    DatasetSpec,
    DATASET_SIZES,
    convert_npz,
    convert_planetoid,
    graph_from_raw,
    karate_graph,
    l1_normalize_rows,
    load_dataset,
    per_class_split,
    preprocess,
    random_graph,
    read_edges,
    synthetic_citation_graph,
    write_dataset,
)

MINI_EDGES = 40  # 30 ring edges + 10 chords; the reversed duplicates and the loop collapse


def raw_pair_oracle(path):
    seen = set()
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        a, b = map(int, line.split("\t"))
        if a != b:
            seen.add((min(a, b), max(a, b)))
    return seen


class TestMini30:
    def spec(self, fixture_root, mode="semi"):
        return DatasetSpec("mini30", mode, str(fixture_root))

    def test_load_counts(self, fixture_root):
        g = load_dataset(self.spec(fixture_root))
        assert g.num_nodes == 30
        assert g.num_features == 5
        assert g.num_classes == 3
        assert g.num_edges == MINI_EDGES
        assert {tuple(e) for e in g.edges.tolist()} == raw_pair_oracle(fixture_root / "mini30" / "edges.tsv")
        assert (int(g.train_mask.sum()), int(g.val_mask.sum()), int(g.test_mask.sum())) == (6, 6, 18)

    def test_full_mode_split(self, fixture_root):
        g = load_dataset(self.spec(fixture_root, "full"))
        assert (int(g.train_mask.sum()), int(g.val_mask.sum()), int(g.test_mask.sum())) == (18, 6, 6)
        assert not (g.train_mask & g.val_mask).any() and not (g.val_mask & g.test_mask).any()

    def test_rows_normalized_and_zero_row_kept(self, fixture_root):
        g = load_dataset(self.spec(fixture_root))
        sums = g.features.sum(axis=1)
        assert np.all(g.features[7] == 0)
        np.testing.assert_allclose(np.delete(sums, 7), 1.0)
        raw = load_dataset(self.spec(fixture_root), row_normalize=False)
        assert raw.features[0].tolist() == [0, 0, 2, 1, 1]

    def test_env_var_root(self, fixture_root, monkeypatch):
        monkeypatch.setenv(DATA_ENV, str(fixture_root))
        g = load_dataset(DatasetSpec("mini30"))
        assert g.name == "mini30"
        monkeypatch.delenv(DATA_ENV)
        with pytest.raises(DatasetError, match=DATA_ENV):
            load_dataset(DatasetSpec("mini30"))

    @pytest.mark.parametrize("missing", ["nodes.tsv", "edges.tsv"])
    def test_missing_file_is_named(self, fixture_root, tmp_path, missing):
        shutil.copytree(fixture_root / "mini30", tmp_path / "mini30")
        (tmp_path / "mini30" / missing).unlink()
        with pytest.raises(DatasetError, match=missing):
            load_dataset(DatasetSpec("mini30", root=str(tmp_path)))

    def test_corrupt_rows(self, fixture_root, tmp_path):
        shutil.copytree(fixture_root / "mini30", tmp_path / "mini30")
        with open(tmp_path / "mini30" / "edges.tsv", "a") as fh:
            fh.write("3\tx\n")
        with pytest.raises(DatasetError, match="edges.tsv"):
            load_dataset(DatasetSpec("mini30", root=str(tmp_path)))
        shutil.copy(fixture_root / "mini30" / "edges.tsv", tmp_path / "mini30" / "edges.tsv")
        with open(tmp_path / "mini30" / "edges.tsv", "a") as fh:
            fh.write("3\t99\n")
        with pytest.raises(DatasetError, match="outside"):
            load_dataset(DatasetSpec("mini30", root=str(tmp_path)))

    def test_missing_mode_in_splits(self, fixture_root, tmp_path):
        shutil.copytree(fixture_root / "mini30", tmp_path / "mini30")
        path = tmp_path / "mini30" / "splits.json"
        s = json.loads(path.read_text())
        del s["full"]
        path.write_text(json.dumps(s))
        with pytest.raises(DatasetError, match="full"):
            load_dataset(DatasetSpec("mini30", "full", str(tmp_path)))


class TestPreprocess:
    def test_l1_rows(self):
        x = l1_normalize_rows(np.array([[2.0, 2.0], [0.0, 0.0], [1.0, -3.0]]))
        np.testing.assert_array_equal(x[0], [0.5, 0.5])
        np.testing.assert_array_equal(x[1], [0.0, 0.0])
        np.testing.assert_allclose(x[2], [0.25, -0.75])
        assert np.isfinite(x).all()

    def test_preprocess_flag(self):
        g = graph_from_raw(2, [(0, 1)], np.array([[2.0, 2.0], [0.0, 0.0]]), [0, 1])
        assert preprocess(g, False) is g
        np.testing.assert_array_equal(preprocess(g).features, [[0.5, 0.5], [0.0, 0.0]])

    def test_duplicate_edge_both_directions(self, tmp_path):
        p = tmp_path / "edges.tsv"
        p.write_text("0\t1\n1\t0\n1\t2\n")
        g = graph_from_raw(3, read_edges(p), np.eye(3), [0, 1, 0])
        assert g.num_edges == 2
        assert g.edges.tolist() == [[0, 1], [1, 2]]


class TestRandomSplits:
    def labels(self, per_class=(60, 55, 70)):
        return np.concatenate([np.full(k, c) for c, k in enumerate(per_class)])

    def test_sizes_and_disjoint(self):
        tr, va, te = per_class_split(self.labels(), seed=0)
        assert tr.sum() == 60 and va.sum() == 90 and te.sum() == 185 - 150
        assert not (tr & va).any() and not (tr & te).any() and not (va & te).any()
        for c in range(3):
            assert (tr & (self.labels() == c)).sum() == 20

    def test_same_seed_same_masks(self, tmp_path):
        labels = self.labels()
        a = per_class_split(labels, 5)
        b = per_class_split(labels, 5)
        c = per_class_split(labels, 6)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert not np.array_equal(a[0], c[0])
        # through the loader as well (no splits.json -> random split)
        write_dataset(tmp_path / "toy", labels, np.ones((labels.size, 2)), [(0, 1)])
        g1 = load_dataset(DatasetSpec("toy", root=str(tmp_path), split_seed=5))
        g2 = load_dataset(DatasetSpec("toy", root=str(tmp_path), split_seed=5))
        assert np.array_equal(g1.train_mask, g2.train_mask) and np.array_equal(g1.val_mask, g2.val_mask)
        assert np.array_equal(g1.train_mask, a[0])

    def test_small_class_rejected(self):
        with pytest.raises(DatasetError, match="class 1"):
            per_class_split(self.labels((60, 49, 70)), 0)

    def test_unlabelled_nodes_excluded(self):
        labels = np.concatenate([self.labels((50, 50)), [-1, -1]])
        tr, va, te = per_class_split(labels, 0)
        assert not (tr | va | te)[-2:].any()


def test_spec_modes():
    with pytest.raises(ValueError):
        DatasetSpec("coauthor_cs", "full")
    with pytest.raises(ValueError):
        DatasetSpec("cora", "transductive")
    assert DATASET_SIZES["cora"][4]["semi"] == (140, 500, 1000)
    assert DATASET_SIZES["citeseer"][4]["semi"] == (120, 500, 1000)
    assert DATASET_SIZES["coauthor_cs"][4]["semi"] == (300, 450, 17583)


def test_standard_split_size_check(tmp_path):
    labels = np.arange(40) % 2
    write_dataset(tmp_path / "cora", labels, np.eye(40), [(0, 1)],
                  {"semi": {"train": [0, 1], "val": [2], "test": [3]}})
    with pytest.raises(DatasetError, match="split sizes"):
        load_dataset(DatasetSpec("cora", root=str(tmp_path)))
    g = load_dataset(DatasetSpec("cora", root=str(tmp_path)), check_sizes=False)
    assert g.train_mask.sum() == 2


def _planetoid_files(d, name, missing_test_ids=()):
    """Tiny fake of the public ind.<name>.* layout: 20 train, 500 val, 40 test nodes."""
    rng = np.random.default_rng(0)
    n_all, n_test, f, c = 520, 40, 4, 3
    test_ids = [i for i in range(n_all, n_all + n_test + len(missing_test_ids)) if i not in missing_test_ids]
    test_order = rng.permutation(test_ids)
    allx = sp.csr_matrix(rng.integers(0, 2, (n_all, f)).astype(float))
    ally = np.eye(c)[rng.integers(0, c, n_all)]
    tx = sp.csr_matrix(np.arange(len(test_ids) * f, dtype=float).reshape(-1, f) + 1)
    ty = np.eye(c)[np.arange(len(test_ids)) % c]
    n = n_all + n_test + len(missing_test_ids)
    graph = {i: [(i + 1) % n, (i + 7) % n] for i in range(n)}
    parts = {"x": allx[:20], "y": ally[:20], "tx": tx, "ty": ty, "allx": allx, "ally": ally, "graph": graph}
    for k, v in parts.items():
        with open(d / f"ind.{name}.{k}", "wb") as fh:
            pickle.dump(v, fh)
    (d / f"ind.{name}.test.index").write_text("\n".join(map(str, test_order)) + "\n")
    return n, test_order, tx.toarray()


class TestConverters:
    def test_planetoid(self, tmp_path):
        raw = tmp_path / "raw"
        raw.mkdir()
        n, test_order, tx = _planetoid_files(raw, "toy")
        out = convert_planetoid(raw, "toy", tmp_path / "data")
        semi = load_dataset(DatasetSpec("toy", "semi", str(tmp_path / "data")), row_normalize=False)
        full = load_dataset(DatasetSpec("toy", "full", str(tmp_path / "data")), row_normalize=False)
        assert out.name == "toy"
        assert semi.num_nodes == n
        assert (semi.train_mask.sum(), semi.val_mask.sum(), semi.test_mask.sum()) == (20, 500, 40)
        assert (full.train_mask.sum(), full.val_mask.sum(), full.test_mask.sum()) == (20, 500, 40)
        # row i of tx belongs to node test.index[i]
        np.testing.assert_array_equal(semi.features[test_order], tx)
        assert semi.num_edges == n * 2

    def test_planetoid_citeseer_gaps(self, tmp_path):
        raw = tmp_path / "raw"
        raw.mkdir()
        n, _, _ = _planetoid_files(raw, "citeseer", missing_test_ids=(530, 531))
        convert_planetoid(raw, "citeseer", tmp_path / "data")
        d = DatasetSpec("citeseer", "full", str(tmp_path / "data"))
        g = load_dataset(d, row_normalize=False, check_sizes=False)
        assert g.num_nodes == n
        assert np.all(g.features[[530, 531]] == 0)
        assert not g.train_mask[[530, 531]].any()
        assert g.train_mask.sum() == n - 500 - 40 - 2

    def test_planetoid_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="ind.cora.x"):
            convert_planetoid(tmp_path, "cora", tmp_path / "out")

    def test_npz_largest_component(self, tmp_path):
        # component {0,1,2,3} and component {4,5}
        a = sp.csr_matrix(([1.0] * 4, ([0, 1, 2, 4], [1, 2, 3, 5])), shape=(6, 6))
        x = sp.csr_matrix(np.arange(12, dtype=float).reshape(6, 2))
        np.savez(tmp_path / "toy.npz", adj_data=a.data, adj_indices=a.indices, adj_indptr=a.indptr,
                 adj_shape=a.shape, attr_data=x.data, attr_indices=x.indices, attr_indptr=x.indptr,
                 attr_shape=x.shape, labels=np.array([0, 1, 0, 1, 0, 1]))
        convert_npz(tmp_path / "toy.npz", "toy", tmp_path / "all")
        convert_npz(tmp_path / "toy.npz", "toy", tmp_path / "lcc", largest_component=True)
        spec = dict(row_normalize=False, check_sizes=False)
        # 6 nodes cannot support 20+30 per class, so only check the raw files
        assert read_edges(tmp_path / "all" / "toy" / "edges.tsv").tolist() == [[0, 1], [1, 2], [2, 3], [4, 5]]
        assert read_edges(tmp_path / "lcc" / "toy" / "edges.tsv").tolist() == [[0, 1], [1, 2], [2, 3]]
        with pytest.raises(DatasetError, match="class"):
            load_dataset(DatasetSpec("toy", root=str(tmp_path / "lcc")), **spec)

    def test_npz_missing(self, tmp_path):
        with pytest.raises(DatasetError, match="nope.npz"):
            convert_npz(tmp_path / "nope.npz", "x", tmp_path)


class TestBuiltinGraphs:
    def test_karate(self):
        g = karate_graph()
        assert (g.num_nodes, g.num_edges, g.num_classes) == (34, 78, 2)
        assert not (g.train_mask & g.test_mask).any()

    def test_random_graph(self):
        g = random_graph(12, 20, num_features=3, num_classes=4, seed=1)
        assert g.num_edges == 20 and g.num_features == 3
        assert np.array_equal(random_graph(12, 20, 3, 4, seed=1).edges, g.edges)

    def test_surrogate_citation_graph_shape(self):
        g = synthetic_citation_graph(seed=0)
        assert (g.num_nodes, g.num_features, g.num_classes) == (2708, 1433, 7)
        assert g.num_edges == 5278
        assert (g.train_mask.sum(), g.val_mask.sum(), g.test_mask.sum()) == (140, 500, 1000)
