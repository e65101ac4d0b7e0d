"""Over-smoothing diagnostics: Mean-Edge-Number, spectral gap, subspace distance."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import (
    EdgeSet,
    NormalizedAdjacency,
    adjacency_pattern,
    connected_components,
)

MAX_DENSE_NODES = 5000


class GraphSizeError(ValueError):
    """Raised when a dense diagnostic is requested on a graph that is too large."""


def accumulated_edge_counts(schedule: Sequence[EdgeSet], include_self_loops: bool = True) -> list[int]:
    """Structural nonzeros of ``pattern(A0) @ pattern(A1) @ ... @ pattern(Al)`` for every ``l``.

    Patterns are 0/1 and cover both directions of each retained pair; the
    diagonal is added when ``include_self_loops``.
    """
    layers = list(schedule)
    if not layers:
        raise ValueError("schedule is empty")
    counts = []
    acc = None
    for e in layers:
        p = adjacency_pattern(e, include_self_loops)
        acc = p if acc is None else acc @ p
        acc.data[:] = 1.0
        acc.eliminate_zeros()
        counts.append(int(acc.nnz))
    return counts


def men_value(schedule: Sequence[EdgeSet], include_self_loops: bool = True) -> float:
    return float(np.mean(accumulated_edge_counts(schedule, include_self_loops)))


def men_star(schedule: Sequence[EdgeSet], include_self_loops: bool = True) -> float:
    """Upper bound of MEN using per-factor counts: mean over ``l`` of prod_{i<=l} |A_i|."""
    layers = list(schedule)
    if not layers:
        raise ValueError("schedule is empty")
    n = layers[0].num_nodes
    per = np.array(
        [2 * e.count + (n if include_self_loops else 0) for e in layers], dtype=np.float64
    )
    return float(np.mean(np.cumprod(per)))


@dataclass
class MenReport:
    """MEN statistics over one or more sampled schedules.

    ``per_layer_counts`` and ``men`` are means across trials; ``men`` equals the
    mean of ``per_layer_counts``.
    """

    per_layer_counts: list
    per_layer_std: list
    men: float
    men_std: float
    men_star: float
    men_star_std: float
    trials: int
    include_self_loops: bool = True
    method: str = ""
    men_values: list = field(default_factory=list)
    men_star_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def men(schedule, include_self_loops: bool = True) -> MenReport:
    """MEN report for a single schedule (``trials == 1``, zero spread)."""
    return men_report([schedule], include_self_loops)


def men_report(schedules: Sequence, include_self_loops: bool = True, method: str = "") -> MenReport:
    """Aggregate MEN and MEN* over independently sampled schedules."""
    schedules = list(schedules)
    if not schedules:
        raise ValueError("need at least one schedule")
    counts = np.array([accumulated_edge_counts(s, include_self_loops) for s in schedules], dtype=np.float64)
    men_vals = counts.mean(axis=1)
    star_vals = np.array([men_star(s, include_self_loops) for s in schedules])
    if not method:
        method = getattr(schedules[0], "method", "")
    return MenReport(
        per_layer_counts=counts.mean(axis=0).tolist(),
        per_layer_std=counts.std(axis=0).tolist(),
        men=float(counts.mean(axis=0).mean()),
        men_std=float(men_vals.std()),
        men_star=float(star_vals.mean()),
        men_star_std=float(star_vals.std()),
        trials=len(schedules),
        include_self_loops=include_self_loops,
        method=method,
        men_values=men_vals.tolist(),
        men_star_values=star_vals.tolist(),
    )


def sample_men(draw: Callable[[], Sequence[EdgeSet]], trials: int, include_self_loops: bool = True,
               method: str = "") -> MenReport:
    """Call ``draw`` ``trials`` times and report MEN statistics in draw order."""
    return men_report([draw() for _ in range(trials)], include_self_loops, method)


def layer_distances(activations: Sequence[np.ndarray]) -> np.ndarray:
    """Frobenius distance between every pair of consecutive activations (NaN on shape change)."""
    out = []
    for a, b in zip(activations[:-1], activations[1:]):
        a = np.asarray(a)
        b = np.asarray(b)
        out.append(np.linalg.norm(b - a) if a.shape == b.shape else np.nan)
    return np.array(out, dtype=np.float64)


def layer_distance(activations: Sequence[np.ndarray]) -> float:
    """Average distance between adjacent layer activations.

    ``activations`` is ``[H0, H1, ..., HL]`` (input first). For ``L >= 5`` the
    result is ``(1 / (L - 3)) * sum_{l=1}^{L-3} |H_{l+1} - H_l|_F``. Shallower
    stacks fall back to the mean over all same-shape consecutive pairs and emit
    a ``RuntimeWarning``.
    """
    d = layer_distances(activations)
    L = len(activations) - 1
    if L >= 5:
        picked = d[1 : L - 2]
        if np.any(np.isnan(picked)):
            raise ValueError("activations H1..H(L-2) must share one shape")
        return float(picked.sum() / (L - 3))
    warnings.warn(
        f"layer_distance needs at least 5 layers, got {L}; averaging all consecutive pairs",
        RuntimeWarning,
        stacklevel=2,
    )
    d = d[~np.isnan(d)]
    if d.size == 0:
        raise ValueError("no consecutive activations of equal shape")
    return float(d.mean())


def spectral_gap(norm_adj: NormalizedAdjacency, tol: float = 1e-9) -> tuple[float, int]:
    """Return ``(lambda, M)``: the largest magnitude outside the unit eigenvalue
    cluster, and the multiplicity of eigenvalue 1.

    ``M`` is cross-checked against the connected components of the pattern.
    """
    if norm_adj.kind not in ("NA", "AN"):
        raise ValueError(f"spectral_gap needs a symmetric NA or AN operator, got {norm_adj.kind}")
    n = norm_adj.shape[0]
    if n > MAX_DENSE_NODES:
        raise GraphSizeError(f"dense eigendecomposition limited to {MAX_DENSE_NODES} nodes, got {n}")
    a = norm_adj.toarray()
    w = np.linalg.eigvalsh(a)
    top = np.abs(w - 1.0) <= tol * max(1, n)
    m = int(top.sum())
    rest = w[~top]
    lam = float(np.max(np.abs(rest))) if rest.size else 0.0

    coo = sp.triu(norm_adj.matrix, k=1).tocoo()
    labels = connected_components(n, np.stack([coo.row, coo.col], axis=1))
    if norm_adj.kind == "AN":
        expected = int(labels.max()) + 1 if n else 0
    else:
        # isolated nodes have an all-zero row under NA and contribute eigenvalue 0
        sizes = np.bincount(labels)
        expected = int(np.count_nonzero(sizes > 1))
    if m != expected:
        raise RuntimeError(f"eigenvalue-1 multiplicity {m} disagrees with {expected} components")
    return lam, m


def convergence_basis(components: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Orthonormal columns ``D^{1/2} u_m / |D^{1/2} u_m|``, one per component."""
    components = np.asarray(components, dtype=np.int64)
    degrees = np.asarray(degrees, dtype=np.float64)
    n = components.size
    cols = []
    for m in range(int(components.max()) + 1 if n else 0):
        e = np.where(components == m, np.sqrt(degrees), 0.0)
        norm = np.linalg.norm(e)
        if norm > 0:
            cols.append(e / norm)
    return np.stack(cols, axis=1) if cols else np.zeros((n, 0))


def subspace_distance(H: np.ndarray, components: np.ndarray, degrees: np.ndarray) -> float:
    """Frobenius distance from ``H`` to the span of the convergence basis."""
    H = np.asarray(H, dtype=np.float64)
    E = convergence_basis(components, degrees)
    if H.shape[0] != E.shape[0]:
        raise ValueError(f"H has {H.shape[0]} rows but the graph has {E.shape[0]} nodes")
    r = H - E @ (E.T @ H)
    return float(np.linalg.norm(r))
