"""Immutable undirected graphs, retained-edge subsets and adjacency normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

NORMALIZATIONS = ("NA", "FOG", "AN", "ANS", "ARW")
SYMMETRIC_NORMALIZATIONS = ("NA", "FOG", "AN", "ANS")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def canonical_edges(pairs, num_nodes: int) -> np.ndarray:
    """Turn arbitrary (src, dst) pairs into sorted, deduplicated ``i < j`` rows.

    Self-loops are dropped and both directions of a pair collapse into one.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= num_nodes):
        raise ValueError(f"edge endpoint out of range [0, {num_nodes})")
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keep = lo != hi
    keys = np.unique(lo[keep] * num_nodes + hi[keep])
    return np.stack([keys // num_nodes, keys % num_nodes], axis=1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with node features, labels and split masks.

    ``edges`` holds each undirected pair once as ``(i, j)`` with ``i < j``,
    sorted lexicographically.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    name: str = ""

    def __post_init__(self):
        n = int(self.num_nodes)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError(f"edge endpoint out of range [0, {n})")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy i < j (no self-loops, one entry per pair)")
            keys = edges[:, 0] * n + edges[:, 1]
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate edges")
            order = np.argsort(keys, kind="stable")
            edges = edges[order]
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != n:
            raise ValueError(f"features must be [{n} x F], got {features.shape}")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError(f"labels must have length {n}, got {labels.shape}")
        masks = [np.asarray(m, dtype=bool) for m in (self.train_mask, self.val_mask, self.test_mask)]
        for m in masks:
            if m.shape != (n,):
                raise ValueError(f"masks must have length {n}, got {m.shape}")
        if np.any(masks[0] & masks[1]) or np.any(masks[0] & masks[2]) or np.any(masks[1] & masks[2]):
            raise ValueError("train/val/test masks overlap")

        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        for attr, m in zip(("train_mask", "val_mask", "test_mask"), masks):
            object.__setattr__(self, attr, _frozen(m))

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.num_nodes else 0

    def mask(self, split: str) -> np.ndarray:
        try:
            return {"train": self.train_mask, "val": self.val_mask, "test": self.test_mask}[split]
        except KeyError:
            raise ValueError(f"unknown split {split!r}") from None

    @cached_property
    def csr_layout(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rows, cols, edge_id)`` of every directed entry plus the diagonal,
        sorted by row then column; ``edge_id`` is -1 on the diagonal."""
        n, m = self.num_nodes, self.num_edges
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n)])
        cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n)])
        eid = np.concatenate([np.arange(m), np.arange(m), -np.ones(n, dtype=np.int64)])
        order = np.lexsort((cols, rows))
        return _frozen(rows[order]), _frozen(cols[order]), _frozen(eid[order])

    def full_edge_set(self) -> "EdgeSet":
        return EdgeSet(self, np.ones(self.num_edges, dtype=bool))

    def replace(self, **changes) -> "Graph":
        kw = dict(
            num_nodes=self.num_nodes, edges=self.edges, features=self.features,
            labels=self.labels, train_mask=self.train_mask, val_mask=self.val_mask,
            test_mask=self.test_mask, name=self.name,
        )
        kw.update(changes)
        return Graph(**kw)


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """A subset of a graph's undirected edges, kept as a boolean mask.

    ``notes`` carries sampler metadata such as the uniform-fallback warning.
    """

    parent: Graph
    retained: np.ndarray
    notes: tuple = field(default=())

    def __post_init__(self):
        r = np.asarray(self.retained, dtype=bool)
        if r.shape != (self.parent.num_edges,):
            raise ValueError(
                f"retained mask must have length {self.parent.num_edges}, got {r.shape}"
            )
        object.__setattr__(self, "retained", _frozen(r))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.retained))

    @property
    def num_nodes(self) -> int:
        return self.parent.num_nodes

    def pairs(self) -> np.ndarray:
        return self.parent.edges[self.retained]

    def issubset(self, other: "EdgeSet") -> bool:
        return bool(not np.any(self.retained & ~other.retained))

    def with_notes(self, *notes: str) -> "EdgeSet":
        return EdgeSet(self.parent, self.retained, self.notes + tuple(notes))

    def __len__(self) -> int:
        return self.count


def degrees(edge_set: EdgeSet, with_self_loops: bool = False) -> np.ndarray:
    """Per-node count of retained incident edges, plus one if ``with_self_loops``."""
    pairs = edge_set.pairs()
    n = edge_set.num_nodes
    d = np.bincount(pairs.ravel(), minlength=n).astype(np.float64)
    if with_self_loops:
        d += 1.0
    return d


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Sparse message-passing operator built from an :class:`EdgeSet`."""

    matrix: sp.csr_matrix
    kind: str
    includes_self_loops: bool

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def symmetric(self) -> bool:
        return self.kind in SYMMETRIC_NORMALIZATIONS

    @property
    def T(self) -> sp.csr_matrix:
        # cached transpose for backward passes through non-symmetric kinds
        t = self.__dict__.get("_transpose")
        if t is None:
            t = self.matrix if self.symmetric else self.matrix.T.tocsr()
            object.__setattr__(self, "_transpose", t)
        return t

    def __matmul__(self, other):
        return self.matrix @ other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _inv_sqrt(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = 1.0 / np.sqrt(d[nz])
    return out


def normalize(edge_set: EdgeSet, kind: str = "AN") -> NormalizedAdjacency:
    """Normalize the retained adjacency.

    ======  ==========================================
    NA      D^{-1/2} A D^{-1/2}
    FOG     I + D^{-1/2} A D^{-1/2}
    AN      (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    ANS     I + (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    ARW     (D+I)^{-1} (A+I)
    ======  ==========================================

    Isolated nodes under NA/FOG get an all-zero row and column in the
    ``D^{-1/2} A D^{-1/2}`` part.
    """
    if kind not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {kind!r}; expected one of {NORMALIZATIONS}")
    n = edge_set.num_nodes
    rows, cols, kept, is_diag = _retained_layout(edge_set, with_diagonal=kind != "NA")
    d = np.bincount(rows[~is_diag], minlength=n).astype(np.float64)

    if kind in ("NA", "FOG"):
        s = _inv_sqrt(d)
        vals = s[rows] * s[cols]
        vals[is_diag] = 1.0
    elif kind in ("AN", "ANS"):
        s = 1.0 / np.sqrt(d + 1.0)
        vals = s[rows] * s[cols]
        if kind == "ANS":
            vals[is_diag] += 1.0
    else:  # ARW
        vals = (1.0 / (d + 1.0))[rows]

    m = _csr(rows, cols, vals, n)
    return NormalizedAdjacency(m, kind, kind != "NA")


def _retained_layout(edge_set: EdgeSet, with_diagonal: bool):
    rows, cols, eid = edge_set.parent.csr_layout
    keep = np.append(edge_set.retained, with_diagonal)[eid]
    r, c = rows[keep], cols[keep]
    return r, c, keep, r == c


def _csr(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, n: int) -> sp.csr_matrix:
    # rows/cols arrive sorted and duplicate-free, so the CSR arrays can be built directly
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    m = sp.csr_matrix((vals, cols.astype(np.int64), indptr), shape=(n, n))
    m.has_sorted_indices = True
    m.has_canonical_format = True
    return m


def adjacency_pattern(edge_set: EdgeSet, include_self_loops: bool = False) -> sp.csr_matrix:
    """0/1 CSR pattern of the retained edges in both directions."""
    rows, cols, _, _ = _retained_layout(edge_set, include_self_loops)
    return _csr(rows, cols, np.ones(rows.size), edge_set.num_nodes)


def connected_components(num_nodes: int, pairs: Sequence) -> np.ndarray:
    """Component label per node via union-find with path halving."""
    parent = list(range(num_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in np.asarray(pairs, dtype=np.int64).reshape(-1, 2):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(num_nodes)], dtype=np.int64)
    _, labels = np.unique(roots, return_inverse=True)
    return labels.astype(np.int64)
