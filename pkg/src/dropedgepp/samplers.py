"""Edge samplers: DropEdge, layer-wise (LI / LID / LDD), feature-dependent and DropEdge++.

Every sampler works on undirected pairs and returns exact-size edge sets.
Weighted sampling without replacement uses exponential keys: edge ``e`` gets
``E_e / w_e`` with ``E_e ~ Exp(1)`` and the ``k`` smallest keys are retained, which is
successive sampling with probability proportional to ``w`` among the edges
still available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import EdgeSet, Graph

KERNELS = ("linear", "polynomial", "rbf", "reverse", "uniform")
FALLBACK_NOTE = "all kernel weights zero on retained edges; fell back to uniform retention"


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def round_half_up(x: float) -> int:
    # 1e-9 absorbs float noise such as 0.6 / 3 * 100 = 19.999999999999996
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class SamplerParams:
    """Sampling rates for the layer-wise samplers.

    ``p_max_prime`` is the reparameterized upper rate,
    ``p_max = p_min + p_max_prime * (1 - p_min)``.
    """

    p_min: float = 0.0
    p_max_prime: float = 0.0
    num_layers: int = 2
    kernel: str = "linear"
    rbf_scale: float = -6.0
    seed: int = 0

    def __post_init__(self):
        for name in ("p_min", "p_max_prime"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.num_layers < 1:
            raise ValueError(f"num_layers must be >= 1, got {self.num_layers}")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")

    @property
    def p_max(self) -> float:
        return self.p_min + self.p_max_prime * (1.0 - self.p_min)

    @property
    def delta_p(self) -> float:
        if self.num_layers == 1:
            return 0.0
        return (self.p_max - self.p_min) / (self.num_layers - 1)

    @property
    def shared_rate(self) -> float:
        """Rate used by single-draw DropEdge for a fair comparison."""
        if self.num_layers == 1:
            return self.p_min
        return 0.5 * (self.p_min + self.p_max)


@dataclass(frozen=True, eq=False)
class AdjacencySchedule:
    """Per-layer edge sets; index 0 feeds the input layer."""

    layers: tuple
    method: str = ""
    clamped_layers: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.layers)

    def __getitem__(self, i) -> EdgeSet:
        return self.layers[i]

    def __iter__(self):
        return iter(self.layers)

    @property
    def counts(self) -> list[int]:
        return [e.count for e in self.layers]

    @property
    def notes(self) -> tuple:
        out = []
        for e in self.layers:
            for n in e.notes:
                if n not in out:
                    out.append(n)
        return tuple(out)

    def reversed(self) -> "AdjacencySchedule":
        return AdjacencySchedule(tuple(self.layers[::-1]), self.method + "-reversed")


def kernel_weights(graph: Graph, kernel: str = "linear", rbf_scale: float = -6.0) -> np.ndarray:
    """Per-edge kernel similarity of endpoint features, aligned with ``graph.edges``.

    linear: x_i.x_j, polynomial: (x_i.x_j)^2, rbf: exp(scale * |x_i - x_j|^2),
    reverse: 1 - x_i.x_j, uniform: 1. Linear and reverse are clamped at 0.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    m = graph.num_edges
    if kernel == "uniform":
        return np.ones(m)
    xi = graph.features[graph.edges[:, 0]]
    xj = graph.features[graph.edges[:, 1]]
    if kernel == "rbf":
        sq = np.einsum("ij,ij->i", xi - xj, xi - xj)
        return np.exp(rbf_scale * sq)
    dot = np.einsum("ij,ij->i", xi, xj)
    if kernel == "linear":
        return np.maximum(dot, 0.0)
    if kernel == "polynomial":
        return dot * dot
    return np.maximum(1.0 - dot, 0.0)


def weighted_keep(weights: np.ndarray, k: int, rng) -> tuple[np.ndarray, bool]:
    """Indices of ``k`` items kept by weighted sampling without replacement.

    Returns ``(indices, fell_back)``; when every weight is zero the draw is uniform.
    """
    rng = _rng(rng)
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if not 0 <= k <= n:
        raise ValueError(f"cannot keep {k} of {n} items")
    pos = w > 0
    fell_back = bool(n and not pos.any())
    if fell_back:
        w = np.ones(n)
        pos = np.ones(n, dtype=bool)
    keys = rng.standard_exponential(n)
    if k == n:
        return np.arange(n), fell_back
    npos = int(np.count_nonzero(pos))
    if k >= npos:
        # every positive-weight item survives; the rest are filled uniformly
        zero = np.flatnonzero(~pos)
        r = k - npos
        fill = zero[np.argpartition(keys[zero], r - 1)[:r]] if r else zero[:0]
        return np.sort(np.concatenate([np.flatnonzero(pos), fill])), fell_back
    with np.errstate(divide="ignore"):
        keys = np.where(pos, keys / np.where(pos, w, 1.0), np.inf)
    if k == 0:
        return np.zeros(0, dtype=np.int64), fell_back
    return np.sort(np.argpartition(keys, k - 1)[:k]), fell_back


def drop_edge(edge_set: EdgeSet, drop_count: int, weights=None, rng=None) -> EdgeSet:
    """Drop exactly ``drop_count`` of the currently retained edges.

    Survivors are drawn without replacement with probability proportional to
    ``weights`` (uniform when ``None``) restricted to the retained edges.
    """
    current = np.flatnonzero(edge_set.retained)
    if not 0 <= drop_count <= current.size:
        raise ValueError(f"drop_count must lie in [0, {current.size}], got {drop_count}")
    if drop_count == 0:
        return edge_set
    if weights is None:
        w = np.ones(current.size)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != edge_set.retained.shape:
            raise ValueError(
                f"weights must align with the parent edge list {edge_set.retained.shape}, got {weights.shape}"
            )
        if np.any(weights < 0):
            raise ValueError("kernel weights must be nonnegative")
        w = weights[current]
    keep, fell_back = weighted_keep(w, current.size - drop_count, rng)
    retained = np.zeros_like(edge_set.retained)
    retained[current[keep]] = True
    notes = edge_set.notes + ((FALLBACK_NOTE,) if fell_back and FALLBACK_NOTE not in edge_set.notes else ())
    return EdgeSet(edge_set.parent, retained, notes)


def layer_drop_counts(num_edges: int, params: SamplerParams) -> tuple[int, int]:
    """(edges dropped at the first step, edges dropped at each later step)."""
    return round_half_up(params.p_min * num_edges), round_half_up(params.delta_p * num_edges)


def _chain(graph: Graph, params: SamplerParams, weights, rng, method: str, top_down: bool):
    rng = _rng(rng)
    first, step = layer_drop_counts(graph.num_edges, params)
    L = params.num_layers
    layers = [None] * L
    clamped = []
    order = range(L - 1, -1, -1) if top_down else range(L)
    prev = graph.full_edge_set()
    for n, l in enumerate(order):
        want = first if n == 0 else step
        have = prev.count
        if want > have:
            clamped.append(l)
            want = have
        prev = drop_edge(prev, want, weights, rng)
        layers[l] = prev
    return AdjacencySchedule(tuple(layers), method, tuple(sorted(clamped)))


def sample_lid(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    """Layer-increasingly-dependent chain: the top layer drops ``p_min|E|``,
    each lower layer drops ``delta_p|E|`` more from the layer above it."""
    return _chain(graph, params, weights, params.seed if rng is None else rng, "lid", top_down=True)


def sample_ldd(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    """Mirror of :func:`sample_lid`: the input layer is densest."""
    return _chain(graph, params, weights, params.seed if rng is None else rng, "ldd", top_down=False)


def lid_layer_sizes(num_edges: int, params: SamplerParams) -> list[int]:
    """Retained count per layer (input first) of a LID chain, clamps included."""
    first, step = layer_drop_counts(num_edges, params)
    L = params.num_layers
    sizes = [0] * L
    have = num_edges
    for n, l in enumerate(range(L - 1, -1, -1)):
        have -= min(first if n == 0 else step, have)
        sizes[l] = have
    return sizes


def sample_li(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    """Independent draw per layer at the same per-layer sizes as :func:`sample_lid`."""
    rng = _rng(params.seed if rng is None else rng)
    full = graph.full_edge_set()
    sizes = lid_layer_sizes(graph.num_edges, params)
    layers = tuple(drop_edge(full, graph.num_edges - s, weights, rng) for s in sizes)
    return AdjacencySchedule(layers, "li")


def sample_shared(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    """One DropEdge draw at rate ``(p_min + p_max) / 2`` reused by every layer.

    With kernel ``weights`` this is the feature-dependent (FD) sampler.
    """
    rng = _rng(params.seed if rng is None else rng)
    drop = round_half_up(params.shared_rate * graph.num_edges)
    e = drop_edge(graph.full_edge_set(), drop, weights, rng)
    return AdjacencySchedule((e,) * params.num_layers, "dropedge" if weights is None else "fd")


def sample_nodrop(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    return AdjacencySchedule((graph.full_edge_set(),) * params.num_layers, "nodrop")


def dropedge_pp(graph: Graph, params: SamplerParams, weights=None, rng=None) -> AdjacencySchedule:
    """LID recursion where every step is a feature-dependent draw.

    Kernel weights are computed once from ``params.kernel`` unless given.
    """
    if weights is None:
        weights = kernel_weights(graph, params.kernel, params.rbf_scale)
    s = _chain(graph, params, weights, params.seed if rng is None else rng, "dropedge_pp", top_down=True)
    return s


SAMPLERS = {
    "nodrop": sample_nodrop,
    "dropedge": sample_shared,
    "li": sample_li,
    "lid": sample_lid,
    "ldd": sample_ldd,
    "fd": sample_shared,
    "dropedge_pp": dropedge_pp,
}

# methods whose draws are weighted by the feature kernel
KERNEL_METHODS = ("fd", "dropedge_pp")


class ScheduleSampler:
    """Draws a fresh schedule per call for one method; kernel weights are cached."""

    def __init__(self, graph: Graph, method: str, params: SamplerParams):
        if method not in SAMPLERS:
            raise ValueError(f"unknown sampler {method!r}; expected one of {tuple(SAMPLERS)}")
        self.graph = graph
        self.method = method
        self.params = params
        self.weights = (
            kernel_weights(graph, params.kernel, params.rbf_scale) if method in KERNEL_METHODS else None
        )
        self.rng = np.random.default_rng(params.seed)

    def __call__(self) -> AdjacencySchedule:
        s = SAMPLERS[self.method](self.graph, self.params, self.weights, self.rng)
        if self.method == "fd":
            s = AdjacencySchedule(s.layers, "fd", s.clamped_layers)
        return s
