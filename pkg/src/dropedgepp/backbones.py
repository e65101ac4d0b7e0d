"""GCN, ResGCN, JKNet and APPNP* driven over per-layer adjacency schedules."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import autograd as ag
from .autograd import Tape, Tensor
from .graph import NORMALIZATIONS, Graph, NormalizedAdjacency, normalize
from .samplers import SAMPLERS, SamplerParams, ScheduleSampler

BACKBONES = ("gcn", "resgcn", "jknet", "appnp")
_ALIASES = {"gcn": "gcn", "resgcn": "resgcn", "jknet": "jknet", "appnp": "appnp", "appnp*": "appnp"}
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    backbone: str = "gcn"
    layers: int = 2
    hidden: int = 16
    alpha: float = 0.1
    self_loop_features: bool = False
    batch_norm: bool = False
    dropout: float = 0.5
    normalization: str = "AN"
    activation: str = "relu"
    bias: bool = False

    def __post_init__(self):
        key = self.backbone.lower()
        if key not in _ALIASES:
            raise ValueError(f"unknown backbone {self.backbone!r}; expected one of GCN, ResGCN, JKNet, APPNP*")
        object.__setattr__(self, "backbone", _ALIASES[key])
        if self.layers < 2:
            raise ValueError(f"layers must be >= 2, got {self.layers}")
        if self.backbone == "appnp" and not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1] for APPNP*, got {self.alpha}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"activation must be 'relu' or 'linear', got {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")


@dataclass(frozen=True)
class SamplerSpec:
    method: str = "nodrop"
    p_min: float = 0.0
    p_max_prime: float = 0.0
    kernel: str = "linear"
    rbf_scale: float = -6.0

    def __post_init__(self):
        if self.method not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.method!r}; expected one of {tuple(SAMPLERS)}")

    def params(self, num_layers: int, seed: int) -> SamplerParams:
        return SamplerParams(self.p_min, self.p_max_prime, num_layers, self.kernel, self.rbf_scale, seed)


def _conv_layer_dims(config: ModelConfig, in_dim: int, num_classes: int) -> list[tuple[int, int]]:
    h, L = config.hidden, config.layers
    if config.backbone == "jknet":
        return [(in_dim, h)] + [(h, h)] * (L - 1)
    return [(in_dim, h)] + [(h, h)] * (L - 2) + [(h, num_classes)]


def init_params(config: ModelConfig, in_dim: int, num_classes: int, rng) -> dict[str, Tensor]:
    """Glorot-uniform weights; batch-norm scales at 1 and shifts at 0."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    p: dict[str, Tensor] = {}

    def w(name, fi, fo):
        p[name] = Tensor(ag.glorot_uniform(fi, fo, rng), requires_grad=True, name=name)

    if config.backbone == "appnp":
        w("f_in", in_dim, config.hidden)
        w("f_out", config.hidden, num_classes)
        if config.bias:
            p["b_in"] = Tensor(np.zeros(config.hidden), requires_grad=True, name="b_in")
            p["b_out"] = Tensor(np.zeros(num_classes), requires_grad=True, name="b_out")
        return p
    dims = _conv_layer_dims(config, in_dim, num_classes)
    for l, (fi, fo) in enumerate(dims):
        w(f"W{l}", fi, fo)
        if config.self_loop_features:
            w(f"Wself{l}", fi, fo)
        if config.bias:
            p[f"b{l}"] = Tensor(np.zeros(fo), requires_grad=True, name=f"b{l}")
    if config.backbone == "jknet":
        w("classifier", config.layers * config.hidden, num_classes)
        if config.bias:
            p["b_classifier"] = Tensor(np.zeros(num_classes), requires_grad=True, name="b_classifier")
    if config.batch_norm:
        for l, (_, fo) in enumerate(dims):
            if _is_hidden_layer(config, l):
                p[f"bn_gamma{l}"] = Tensor(np.ones(fo), requires_grad=True, name=f"bn_gamma{l}")
                p[f"bn_beta{l}"] = Tensor(np.zeros(fo), requires_grad=True, name=f"bn_beta{l}")
    return p


def _is_hidden_layer(config: ModelConfig, l: int) -> bool:
    return config.backbone == "jknet" or l < config.layers - 1


def weight_names(params: dict) -> list[str]:
    # biases ("b*") and batch-norm parameters ("bn_*") are not weight matrices
    return [k for k in params if not k.startswith("b")]


INPUT_WEIGHTS = ("W0", "Wself0", "f_in")
L2_SCOPES = ("input", "all")


def decayed_names(params: dict, scope: str = "input") -> list[str]:
    """Weights that carry the L2 penalty: those reading raw features, or every weight."""
    if scope not in L2_SCOPES:
        raise ValueError(f"l2 scope must be one of {L2_SCOPES}, got {scope!r}")
    names = weight_names(params)
    return names if scope == "all" else [k for k in names if k in INPUT_WEIGHTS]


def spectral_norms(params: dict) -> dict[str, float]:
    """Maximum singular value of every weight matrix."""
    return {k: float(np.linalg.norm(params[k].data, 2)) for k in weight_names(params)}


def spectral_rescale(params: dict, bound: float = 1.0) -> None:
    """Scale each weight matrix in place so its largest singular value is at most ``bound``."""
    for k in weight_names(params):
        s = np.linalg.norm(params[k].data, 2)
        if s > bound:
            params[k].data = params[k].data * (bound / s)


def _adjs(schedule, n: int) -> list:
    if isinstance(schedule, NormalizedAdjacency):
        return [schedule] * n
    adjs = list(schedule)
    if len(adjs) != n:
        raise ValueError(f"schedule has {len(adjs)} layers but the model needs {n}")
    return adjs


def forward(config: ModelConfig, params: dict, schedule, X, train: bool = False,
            rng: np.random.Generator | None = None, bn_state: dict | None = None,
            return_hidden: bool = False):
    """Logits for every node.

    ``schedule`` is one :class:`NormalizedAdjacency` per propagation layer
    (index 0 first), or a single operator shared by all layers. With
    ``return_hidden`` the result is ``(logits, [H0, H1, ..., HL])`` as arrays.
    """
    sparse_in = sp.issparse(X)
    if not sparse_in:
        X = ag.as_tensor(X)
    act = ag.relu if config.activation == "relu" else (lambda t: t)
    adjs = _adjs(schedule, config.layers)
    hidden = [X.toarray() if sparse_in else X.data] if return_hidden else []
    p = params
    drop = config.dropout

    def drop_in(h):
        if sp.issparse(h):
            return ag.sparse_dropout(h, drop, rng, train)
        return ag.dropout(h, drop, rng, train)

    def lin(h, w):
        return ag.spmm(h, w) if sp.issparse(h) else ag.matmul(h, w)

    if config.backbone == "appnp":
        h = drop_in(X)
        h = lin(h, p["f_in"])
        if "b_in" in p:
            h = ag.add_bias(h, p["b_in"])
        h = ag.dropout(ag.relu(h), drop, rng, train)
        z0 = ag.matmul(h, p["f_out"])
        if "b_out" in p:
            z0 = ag.add_bias(z0, p["b_out"])
        z = z0
        if return_hidden:
            hidden.append(z0.data)
        a = config.alpha
        for l, adj in enumerate(adjs):
            z = ag.add(ag.scale(ag.spmm(adj, z), 1.0 - a), ag.scale(z0, a))
            if l < config.layers - 1:
                z = act(z)
            if return_hidden:
                hidden.append(z.data)
        return (z, hidden) if return_hidden else z

    def conv(h, l):
        h = drop_in(h)
        out = ag.spmm(adj_l, lin(h, p[f"W{l}"]))
        if config.self_loop_features:
            out = ag.add(out, lin(h, p[f"Wself{l}"]))
        if f"b{l}" in p:
            out = ag.add_bias(out, p[f"b{l}"])
        if config.batch_norm and f"bn_gamma{l}" in p:
            st = None if bn_state is None else bn_state.setdefault(l, ag.BatchNormState(out.shape[1]))
            out = ag.batch_norm(out, p[f"bn_gamma{l}"], p[f"bn_beta{l}"], st, train)
        return out

    h = X
    states = []
    for l in range(config.layers):
        adj_l = adjs[l]
        out = conv(h, l)
        last = l == config.layers - 1 and config.backbone != "jknet"
        if not last:
            out = act(out)
        if config.backbone == "resgcn" and 0 < l < config.layers - 1:
            out = ag.add(out, h)
        h = out
        states.append(h)
        if return_hidden:
            hidden.append(h.data)
    if config.backbone == "jknet":
        cat = ag.concat(states, axis=1)
        cat = ag.dropout(cat, drop, rng, train)
        h = ag.matmul(cat, p["classifier"])
        if "b_classifier" in p:
            h = ag.add_bias(h, p["b_classifier"])
        if return_hidden:
            hidden.append(h.data)
    return (h, hidden) if return_hidden else h


def model_input(features: np.ndarray):
    """Features as CSR when mostly zero (bag-of-words inputs), else a dense tensor."""
    x = np.asarray(features, dtype=np.float64)
    if x.size and np.count_nonzero(x) < 0.25 * x.size:
        return sp.csr_matrix(x)
    return Tensor(x)


def accuracy(logits, labels, mask) -> float:
    """Argmax accuracy on the masked rows; ties go to the lowest class index."""
    logits = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    pred = np.argmax(logits[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


@dataclass
class TrainOptions:
    lr: float = 0.01
    l2: float = 5e-4
    epochs: int = 400
    patience: int = 100
    spectral_rescale: bool = False
    l2_scope: str = "input"


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


@dataclass
class TrainState:
    config: ModelConfig
    params: dict
    opt_state: ag.AdamState
    epoch: int = 0
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    best_params: dict = field(default_factory=dict)
    bn_state: dict = field(default_factory=dict)
    best_bn_state: dict = field(default_factory=dict)
    curves: dict = field(default_factory=lambda: {"train_loss": [], "val_loss": [], "val_acc": []})
    sampling_time: float = 0.0
    training_time: float = 0.0
    eval_time: float = 0.0
    sampler_notes: list = field(default_factory=list)
    rng_state: dict = field(default_factory=dict)

    def singular_values(self, best: bool = True) -> dict[str, float]:
        src = self.best_params if best and self.best_params else {k: v.data for k, v in self.params.items()}
        return {k: float(np.linalg.norm(src[k], 2)) for k in weight_names(src)}

    def best_tensors(self) -> dict:
        if not self.best_params:
            return self.params
        return {k: Tensor(v) for k, v in self.best_params.items()}


def _snapshot_bn(bn_state: dict) -> dict:
    out = {}
    for k, s in bn_state.items():
        c = ag.BatchNormState(s.mean.size, s.momentum)
        c.mean, c.var = s.mean.copy(), s.var.copy()
        out[k] = c
    return out


def _loss(config, params, logits, graph, l2, scope="input"):
    ce = ag.softmax_cross_entropy(logits, graph.labels, graph.train_mask)
    if l2:
        ce = ag.add_scalars(ce, ag.sum_squares([params[k] for k in decayed_names(params, scope)], 0.5 * l2))
    return ce


def train(config: ModelConfig, graph: Graph, sampler_spec: SamplerSpec | None = None, seed: int = 0,
          options: TrainOptions | None = None) -> TrainState:
    """Full-batch training with a freshly sampled schedule every epoch.

    Validation always runs on the full normalized graph. The returned state
    keeps the parameters from the epoch with the lowest validation loss.
    """
    sampler_spec = sampler_spec or SamplerSpec()
    options = options or TrainOptions()
    if not graph.train_mask.any() or not graph.val_mask.any():
        raise ValueError("train and validation masks must be non-empty")
    model_rng = np.random.default_rng([seed, 0])
    params = init_params(config, graph.num_features, graph.num_classes, model_rng)
    if options.spectral_rescale:
        spectral_rescale(params)
    names = list(params)
    state = TrainState(config, params, ag.AdamState([params[k] for k in names]))

    full_adj = normalize(graph.full_edge_set(), config.normalization)
    sampler = None
    if sampler_spec.method != "nodrop":
        sampler = ScheduleSampler(graph, sampler_spec.method, sampler_spec.params(config.layers, seed))
    X = model_input(graph.features)
    bad = 0
    for epoch in range(options.epochs):
        t0 = time.perf_counter()
        if sampler is None:
            adjs = full_adj
        else:
            sched = sampler()
            for note in sched.notes:
                if note not in state.sampler_notes:
                    state.sampler_notes.append(note)
            cache = {}
            adjs = []
            for e in sched:
                key = id(e)
                if key not in cache:
                    cache[key] = normalize(e, config.normalization)
                adjs.append(cache[key])
        t1 = time.perf_counter()
        with Tape() as tape:
            logits = forward(config, params, adjs, X, train=True, rng=model_rng, bn_state=state.bn_state)
            loss = _loss(config, params, logits, graph, options.l2, options.l2_scope)
        tape.backward(loss)
        ag.adam_step([params[k] for k in names], [params[k].grad for k in names], state.opt_state,
                     options.lr)
        for k in names:
            params[k].grad = None
        if options.spectral_rescale:
            spectral_rescale(params)
        t2 = time.perf_counter()
        eval_logits = forward(config, params, full_adj, X, train=False, bn_state=state.bn_state)
        val_loss = float(ag.softmax_cross_entropy(eval_logits, graph.labels, graph.val_mask).data)
        val_acc = accuracy(eval_logits, graph.labels, graph.val_mask)
        t3 = time.perf_counter()
        state.sampling_time += t1 - t0
        state.training_time += t2 - t1
        state.eval_time += t3 - t2
        train_loss = float(loss.data)
        state.curves["train_loss"].append(train_loss)
        state.curves["val_loss"].append(val_loss)
        state.curves["val_acc"].append(val_acc)
        state.epoch = epoch + 1
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}",
                {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
                 "config": asdict(config), "sampler": asdict(sampler_spec), "seed": seed},
            )
        if val_loss < state.best_val_loss:
            state.best_val_loss = val_loss
            state.best_epoch = epoch
            state.best_params = {k: v.data.copy() for k, v in params.items()}
            state.best_bn_state = _snapshot_bn(state.bn_state)
            bad = 0
        else:
            bad += 1
            if bad >= options.patience:
                break
    state.rng_state = {
        "seed": int(seed),
        "model": model_rng.bit_generator.state,
        "sampler": sampler.rng.bit_generator.state if sampler is not None else None,
    }
    return state


def predict(state: TrainState, graph: Graph, return_hidden: bool = False):
    adj = normalize(graph.full_edge_set(), state.config.normalization)
    bn = state.best_bn_state if state.best_params else state.bn_state
    return forward(state.config, state.best_tensors(), adj, model_input(graph.features), train=False,
                   bn_state=bn, return_hidden=return_hidden)


def evaluate(state: TrainState, graph: Graph, split: str = "test") -> float:
    """Accuracy of the best-validation snapshot on ``split``, using the full graph."""
    return accuracy(predict(state, graph), graph.labels, graph.mask(split))


def save_checkpoint(path, config: ModelConfig, params: dict, rng_state: dict | None = None,
                    sampler: SamplerSpec | None = None) -> None:
    """Write an ``.npz`` holding the parameters plus a JSON header.

    Layout: key ``__header__`` is a UTF-8 JSON document with ``format``
    (``"dropedgepp-checkpoint"``), ``version``, ``model_config``,
    ``sampler`` and ``rng_state``; every other key ``param/<name>`` is a
    float64 array.
    """
    header = {
        "format": "dropedgepp-checkpoint",
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(config),
        "sampler": asdict(sampler) if sampler else None,
        "rng_state": rng_state,
    }
    arrays = {f"param/{k}": (v.data if isinstance(v, Tensor) else np.asarray(v)) for k, v in params.items()}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> tuple[ModelConfig, dict, dict]:
    """Inverse of :func:`save_checkpoint`: ``(config, params, header)``."""
    with np.load(Path(path)) as z:
        header = json.loads(bytes(z["__header__"]).decode("utf-8"))
        if header.get("format") != "dropedgepp-checkpoint":
            raise ValueError(f"{path}: not a checkpoint file")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        params = {k[len("param/"):]: Tensor(z[k], requires_grad=True, name=k[len("param/"):])
                  for k in z.files if k.startswith("param/")}
    return ModelConfig(**header["model_config"]), params, header
