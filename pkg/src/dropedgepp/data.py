"""Dataset files, converters, split construction and small built-in graphs.

On-disk layout of one dataset directory ``<root>/<name>/``::

    nodes.tsv    one line per node: ``id<TAB>label<TAB>x_0<TAB>...<TAB>x_{F-1}``
                 ids are 0..N-1 in order; labels are class indices, -1 when unknown
    edges.tsv    one line per edge: ``src<TAB>dst``; direction, duplicates and
                 self-loops are tolerated and canonicalized on load
    splits.json  ``{"semi": {"train": [...], "val": [...], "test": [...]},
                    "full": {...}}`` node-index lists per mode (citation graphs)

Lines starting with ``#`` and blank lines are ignored. Datasets without a
``splits.json`` (co-author / co-purchase) get per-class random splits drawn
from the split seed: 20 training and 30 validation nodes per class, the rest
for testing.
"""

from __future__ import annotations

import json
import os
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph, canonical_edges, connected_components

DATA_ENV = "DROPEDGEPP_DATA"

DATASETS = ("cora", "citeseer", "pubmed", "coauthor_cs", "coauthor_physics", "amazon_photos")
CITATION = ("cora", "citeseer", "pubmed")

# name -> (nodes, edges, features, classes, {mode: (train, val, test)})
DATASET_SIZES = {
    "cora": (2708, 5429, 1433, 7, {"full": (1208, 500, 1000), "semi": (140, 500, 1000)}),
    "citeseer": (3327, 4732, 3703, 6, {"full": (1812, 500, 1000), "semi": (120, 500, 1000)}),
    "pubmed": (19717, 44338, 500, 3, {"full": (18217, 500, 1000), "semi": (60, 500, 1000)}),
    "coauthor_cs": (18333, 81894, 6805, 15, {"semi": (300, 450, 17583)}),
    "coauthor_physics": (34493, 247962, 8415, 5, {"semi": (100, 150, 34243)}),
    "amazon_photos": (7487, 119043, 745, 8, {"semi": (160, 240, 7087)}),
}

TRAIN_PER_CLASS = 20
VAL_PER_CLASS = 30


class DatasetError(Exception):
    """Missing or malformed dataset files."""


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    mode: str = "semi"
    root: str | None = None
    split_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("semi", "full"):
            raise ValueError(f"mode must be 'semi' or 'full', got {self.mode!r}")
        if self.name in DATASETS and self.name not in CITATION and self.mode != "semi":
            raise ValueError(f"{self.name} only supports the semi-supervised mode")

    def directory(self) -> Path:
        root = self.root or os.environ.get(DATA_ENV)
        if not root:
            raise DatasetError(f"no dataset root given and ${DATA_ENV} is unset")
        return Path(root) / self.name


def l1_normalize_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    s = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, s, out=np.zeros_like(x), where=s > 0)


def preprocess(graph: Graph, row_normalize: bool = True) -> Graph:
    """L1-normalize feature rows (zero rows stay zero)."""
    if not row_normalize:
        return graph
    return graph.replace(features=l1_normalize_rows(graph.features))


def graph_from_raw(num_nodes: int, raw_pairs, features, labels, train=None, val=None, test=None,
                   name: str = "") -> Graph:
    """Build a :class:`Graph` from possibly directed / duplicated / looped edge pairs."""
    def mask(idx):
        m = np.zeros(num_nodes, dtype=bool)
        if idx is not None:
            m[np.asarray(idx, dtype=np.int64)] = True
        return m

    return Graph(num_nodes, canonical_edges(raw_pairs, num_nodes), features, labels,
                 mask(train), mask(val), mask(test), name)


def _read_rows(path: Path) -> list[list[str]]:
    if not path.is_file():
        raise DatasetError(f"missing dataset file: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line.split("\t"))
    return rows


def read_nodes(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path)
    if not rows:
        raise DatasetError(f"{path}: no nodes")
    width = len(rows[0])
    labels = np.empty(len(rows), dtype=np.int64)
    feats = np.empty((len(rows), width - 2), dtype=np.float64)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DatasetError(f"{path}: row {i} has {len(r)} fields, expected {width}")
        try:
            if int(r[0]) != i:
                raise DatasetError(f"{path}: node ids must be 0..N-1 in order (row {i} has id {r[0]})")
            labels[i] = int(r[1])
            feats[i] = [float(v) for v in r[2:]]
        except ValueError as exc:
            raise DatasetError(f"{path}: row {i}: {exc}") from None
    return labels, feats


def read_edges(path: Path) -> np.ndarray:
    rows = _read_rows(path)
    try:
        pairs = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"{path}: {exc}") from None
    return pairs.reshape(-1, 2)


def write_dataset(directory, labels, features, pairs, splits: dict | None = None) -> None:
    """Write the text layout described in the module docstring."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    features = np.asarray(features)
    with open(d / "nodes.tsv", "w", encoding="utf-8") as fh:
        for i, (y, row) in enumerate(zip(labels, features)):
            fh.write(f"{i}\t{int(y)}\t" + "\t".join(_fmt(v) for v in row) + "\n")
    with open(d / "edges.tsv", "w", encoding="utf-8") as fh:
        for a, b in np.asarray(pairs, dtype=np.int64).reshape(-1, 2):
            fh.write(f"{a}\t{b}\n")
    if splits is not None:
        clean = {m: {k: [int(i) for i in v] for k, v in s.items()} for m, s in splits.items()}
        with open(d / "splits.json", "w", encoding="utf-8") as fh:
            json.dump(clean, fh)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def per_class_split(labels: np.ndarray, seed: int, train_per_class: int = TRAIN_PER_CLASS,
                    val_per_class: int = VAL_PER_CLASS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random per-class split; all labelled nodes not drawn go to the test set."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, val = [], []
    need = train_per_class + val_per_class
    for c in np.unique(labels[labels >= 0]):
        idx = np.flatnonzero(labels == c)
        if idx.size < need:
            raise DatasetError(f"class {c} has {idx.size} nodes, fewer than the {need} a split requires")
        idx = rng.permutation(idx)
        train.extend(idx[:train_per_class])
        val.extend(idx[train_per_class:need])
    n = labels.size
    tr = np.zeros(n, dtype=bool)
    va = np.zeros(n, dtype=bool)
    tr[train] = True
    va[val] = True
    te = (labels >= 0) & ~tr & ~va
    return tr, va, te


def load_dataset(spec: DatasetSpec, row_normalize: bool = True, check_sizes: bool = True) -> Graph:
    """Load ``<root>/<name>/`` into a :class:`Graph` with masks for ``spec.mode``."""
    d = spec.directory()
    labels, feats = read_nodes(d / "nodes.tsv")
    pairs = read_edges(d / "edges.tsv")
    n = labels.size
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise DatasetError(f"{d / 'edges.tsv'}: endpoint outside [0, {n})")
    split_path = d / "splits.json"
    if split_path.is_file():
        try:
            with open(split_path, encoding="utf-8") as fh:
                splits = json.load(fh)
            s = splits[spec.mode]
            masks = []
            for k in ("train", "val", "test"):
                m = np.zeros(n, dtype=bool)
                m[np.asarray(s[k], dtype=np.int64)] = True
                masks.append(m)
        except (KeyError, ValueError, IndexError) as exc:
            raise DatasetError(f"{split_path}: no usable '{spec.mode}' split ({exc})") from None
    else:
        masks = list(per_class_split(labels, spec.split_seed))
    safe_labels = np.where(labels >= 0, labels, 0)
    try:
        g = Graph(n, canonical_edges(pairs, n), feats, safe_labels, *masks, name=spec.name)
    except ValueError as exc:
        raise DatasetError(f"{d}: {exc}") from None
    if check_sizes and spec.name in DATASET_SIZES:
        want = DATASET_SIZES[spec.name][4].get(spec.mode)
        got = tuple(int(m.sum()) for m in masks)
        if want is not None and got != want:
            raise DatasetError(f"{spec.name}/{spec.mode}: split sizes {got} differ from {want}")
    return preprocess(g, row_normalize)


# --- converters from public distributions -------------------------------------------------


def _load_pickle(path: Path):
    if not path.is_file():
        raise DatasetError(f"missing dataset file: {path}")
    with open(path, "rb") as fh:
        try:
            return pickle.load(fh, encoding="latin1")
        except Exception as exc:  # corrupt or foreign pickle
            raise DatasetError(f"{path}: cannot unpickle ({exc})") from None


def convert_planetoid(raw_dir, name: str, out_root) -> Path:
    """Convert the ``ind.<name>.*`` Planetoid files to the text layout.

    The semi-supervised split is the standard one (first ``len(y)`` nodes for
    training, the next 500 for validation, ``test.index`` for testing). The
    full-supervised split keeps validation and test and trains on every other
    node that exists in the raw data.
    """
    raw = Path(raw_dir)
    parts = {k: _load_pickle(raw / f"ind.{name}.{k}") for k in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    idx_path = raw / f"ind.{name}.test.index"
    if not idx_path.is_file():
        raise DatasetError(f"missing dataset file: {idx_path}")
    test_idx = np.loadtxt(idx_path, dtype=np.int64).reshape(-1)
    test_sorted = np.sort(test_idx)

    def dense(m):
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    allx, tx = dense(parts["allx"]), dense(parts["tx"])
    ally, ty = np.asarray(parts["ally"]), np.asarray(parts["ty"])
    missing = np.zeros(0, dtype=np.int64)
    if name == "citeseer":
        # some test ids have no features; pad them so ids stay aligned
        full_range = np.arange(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = np.zeros((full_range.size, tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min()] = tx
        ty_ext = np.zeros((full_range.size, ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min()] = ty
        missing = np.setdiff1d(full_range, test_sorted)
        tx, ty = tx_ext, ty_ext
    features = np.vstack([allx, tx])
    onehot = np.vstack([ally, ty])
    features[test_idx] = features[test_sorted]
    onehot[test_idx] = onehot[test_sorted]
    labels = np.where(onehot.sum(axis=1) > 0, onehot.argmax(axis=1), -1)
    n = features.shape[0]

    pairs = [(int(a), int(b)) for a, nbrs in parts["graph"].items() for b in nbrs]
    n_train = len(parts["y"])
    train = np.arange(n_train)
    val = np.arange(n_train, n_train + 500)
    test = test_idx
    taken = np.zeros(n, dtype=bool)
    taken[val] = True
    taken[test] = True
    taken[missing] = True
    full_train = np.flatnonzero(~taken)
    splits = {
        "semi": {"train": train, "val": val, "test": test},
        "full": {"train": full_train, "val": val, "test": test},
    }
    out = Path(out_root) / name
    write_dataset(out, labels, features, pairs, splits)
    return out


def convert_npz(npz_path, name: str, out_root, largest_component: bool = False) -> Path:
    """Convert a co-author / co-purchase ``.npz`` (CSR ``adj_*`` and ``attr_*`` arrays, ``labels``)."""
    path = Path(npz_path)
    if not path.is_file():
        raise DatasetError(f"missing dataset file: {path}")
    try:
        with np.load(path, allow_pickle=False) as z:
            adj = sp.csr_matrix((z["adj_data"], z["adj_indices"], z["adj_indptr"]), shape=tuple(z["adj_shape"]))
            if "attr_data" in z:
                attr = sp.csr_matrix((z["attr_data"], z["attr_indices"], z["attr_indptr"]),
                                     shape=tuple(z["attr_shape"])).toarray()
            else:
                attr = np.asarray(z["attr_matrix"])
            labels = np.asarray(z["labels"], dtype=np.int64)
    except (KeyError, ValueError, OSError) as exc:
        raise DatasetError(f"{path}: unreadable npz ({exc})") from None
    coo = sp.triu(adj + adj.T, k=1).tocoo()
    pairs = np.stack([coo.row, coo.col], axis=1)
    if largest_component:
        comp = connected_components(adj.shape[0], pairs)
        keep = np.flatnonzero(comp == np.bincount(comp).argmax())
        remap = -np.ones(adj.shape[0], dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        pairs = remap[pairs]
        pairs = pairs[(pairs >= 0).all(axis=1)]
        attr, labels = attr[keep], labels[keep]
    out = Path(out_root) / name
    write_dataset(out, labels, attr, pairs)
    return out


# --- small built-in graphs ----------------------------------------------------------------


def karate_graph(seed: int = 0) -> Graph:
    """Zachary's karate club with one-hot node features and the two-faction labels."""
    import networkx as nx

    g = nx.karate_club_graph()
    n = g.number_of_nodes()
    labels = np.array([0 if g.nodes[i]["club"] == "Mr. Hi" else 1 for i in range(n)])
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    train, val, test = order[:8], order[8:16], order[16:]
    return graph_from_raw(n, list(g.edges()), np.eye(n), labels, train, val, test, name="karate")


def random_graph(num_nodes: int, num_edges: int, num_features: int = 4, num_classes: int = 2,
                 seed: int = 0, nonnegative: bool = True) -> Graph:
    """Uniform random simple graph with exactly ``num_edges`` edges and random features."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(num_nodes, k=1)
    if num_edges > iu.size:
        raise ValueError(f"at most {iu.size} edges fit on {num_nodes} nodes")
    pick = rng.choice(iu.size, size=num_edges, replace=False)
    x = rng.random((num_nodes, num_features))
    if not nonnegative:
        x = x - 0.5
    y = rng.integers(0, num_classes, size=num_nodes)
    order = rng.permutation(num_nodes)
    k = max(1, num_nodes // 3)
    return graph_from_raw(num_nodes, np.stack([iu[pick], ju[pick]], axis=1), x, y,
                          order[:k], order[k:2 * k], order[2 * k:], name="random")


def synthetic_citation_graph(num_nodes: int = 2708, num_edges: int = 5278, num_features: int = 1433,
                             num_classes: int = 7, homophily: float = 0.81, words_per_node: int = 18,
                             topic_words: int = 120, topic_share: float = 0.2,
                             train_per_class: int = 20, num_val: int = 500, num_test: int = 1000,
                             seed: int = 0) -> Graph:
    """A Cora-sized planted-partition graph with bag-of-words features.

    Edges are preferential-attachment style within and across classes with the
    given edge ``homophily``; each node's binary features mix ``topic_share`` of
    class-specific words with generic words. Split sizes mimic the standard
    citation semi-supervised protocol.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=num_nodes)
    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]
    weight = rng.pareto(2.0, size=num_nodes) + 1.0
    keys = set()
    pairs = []
    while len(pairs) < num_edges:
        i = int(rng.choice(num_nodes, p=weight / weight.sum()))
        if rng.random() < homophily:
            pool = by_class[labels[i]]
        else:
            pool = np.flatnonzero(labels != labels[i])
        w = weight[pool]
        j = int(pool[rng.choice(pool.size, p=w / w.sum())])
        a, b = min(i, j), max(i, j)
        if a == b or (a, b) in keys:
            continue
        keys.add((a, b))
        pairs.append((a, b))
    vocab = np.arange(num_features)
    topics = [rng.choice(vocab, size=topic_words, replace=False) for _ in range(num_classes)]
    x = np.zeros((num_nodes, num_features))
    for i in range(num_nodes):
        k = max(1, int(rng.poisson(words_per_node)))
        n_topic = rng.binomial(k, topic_share)
        x[i, rng.choice(topics[labels[i]], size=n_topic)] = 1.0
        x[i, rng.choice(vocab, size=k - n_topic)] = 1.0
    train = np.concatenate([rng.permutation(idx)[:train_per_class] for idx in by_class])
    rest = rng.permutation(np.setdiff1d(np.arange(num_nodes), train))
    val, test = rest[:num_val], rest[num_val:num_val + num_test]
    g = graph_from_raw(num_nodes, pairs, x, labels, train, val, test, name="synthetic_citation")
    return preprocess(g)
