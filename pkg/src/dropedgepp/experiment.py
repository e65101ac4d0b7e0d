"""Config-driven experiments: config files, presets, run reports and the command bodies.

Config files are flat ``section.key = value`` lines (``#`` starts a comment).
Every key is listed in :data:`DEFAULTS`; unknown keys are rejected. Lists
(``run.seeds``) are comma separated; an empty ``dataset.root`` means "use
``$DROPEDGEPP_DATA``".
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import platform
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .backbones import (L2_SCOPES, ModelConfig, SamplerSpec, TrainOptions, evaluate, predict, save_checkpoint,
                        train)
from .data import DatasetSpec, load_dataset
from .men import layer_distance, layer_distances, men_report
from .samplers import ScheduleSampler

REPORT_FORMAT = "dropedgepp-run-report"
REPORT_VERSION = 1
MEN_FORMAT = "dropedgepp-men-report"

# grid the appendix search draws sampling rates from
RATE_GRID = (0.05,) + tuple(round(0.1 * i, 1) for i in range(1, 11))

DEFAULTS = {
    "dataset.name": "cora",
    "dataset.mode": "semi",
    "dataset.root": "",
    "dataset.split_seed": 0,
    "dataset.row_normalize": True,
    "model.backbone": "gcn",
    "model.layers": 2,
    "model.hidden": 16,
    "model.dropout": 0.5,
    "model.normalization": "AN",
    "model.alpha": 0.1,
    "model.self_loop_features": False,
    "model.batch_norm": False,
    "model.activation": "relu",
    "model.bias": False,
    "sampler.method": "nodrop",
    "sampler.p_min": 0.0,
    "sampler.p_max_prime": 0.0,
    "sampler.kernel": "linear",
    "sampler.rbf_scale": -6.0,
    "optim.lr": 0.01,
    "optim.l2": 5e-4,
    "optim.epochs": 400,
    "optim.patience": 100,
    "optim.l2_scope": "input",
    "run.seeds": (0, 1, 2, 3, 4, 5, 6, 7, 8, 9),
    "run.output_dir": "runs",
    "run.name": "",
    "men.trials": 10,
    "men.self_loops": True,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 1)."""


def _parse_value(key: str, raw: str):
    default = DEFAULTS[key]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, tuple):
            return tuple(int(s) for s in raw.split(",") if s.strip())
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return raw


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) pairs, all defaults materialized

    @classmethod
    def from_mapping(cls, overrides: dict | None = None) -> "ExperimentConfig":
        merged = dict(DEFAULTS)
        for k, v in (overrides or {}).items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            d = DEFAULTS[k]
            if isinstance(v, str):
                v = _parse_value(k, v)
            elif isinstance(d, tuple):
                v = tuple(int(x) for x in v)
            elif isinstance(d, float) and not isinstance(v, bool):
                v = float(v)
            merged[k] = v
        cfg = cls(tuple(sorted(merged.items())))
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        overrides = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in DEFAULTS:
                raise ConfigError(f"{source}:{lineno}: unknown config key {k!r}")
            overrides[k] = v
        return cls.from_mapping(overrides)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file not found: {p}")
        return cls.from_text(p.read_text(encoding="utf-8"), str(p))

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values}

    def to_text(self) -> str:
        return "".join(f"{k} = {_format_value(v)}\n" for k, v in self.values)

    def updated(self, **overrides) -> "ExperimentConfig":
        d = dict(self.values)
        for k, v in overrides.items():
            d[k.replace("__", ".")] = v
        return ExperimentConfig.from_mapping(d)

    # typed views -----------------------------------------------------------------------
    def dataset(self) -> DatasetSpec:
        return DatasetSpec(self["dataset.name"], self["dataset.mode"], self["dataset.root"] or None,
                           self["dataset.split_seed"])

    def model(self) -> ModelConfig:
        return ModelConfig(
            backbone=self["model.backbone"], layers=self["model.layers"], hidden=self["model.hidden"],
            alpha=self["model.alpha"], self_loop_features=self["model.self_loop_features"],
            batch_norm=self["model.batch_norm"], dropout=self["model.dropout"],
            normalization=self["model.normalization"], activation=self["model.activation"],
            bias=self["model.bias"],
        )

    def sampler(self) -> SamplerSpec:
        return SamplerSpec(self["sampler.method"], self["sampler.p_min"], self["sampler.p_max_prime"],
                           self["sampler.kernel"], self["sampler.rbf_scale"])

    def options(self) -> TrainOptions:
        return TrainOptions(lr=self["optim.lr"], l2=self["optim.l2"], epochs=self["optim.epochs"],
                            patience=self["optim.patience"], l2_scope=self["optim.l2_scope"])

    def validate(self) -> None:
        try:
            self.dataset()
            self.model()
            spec = self.sampler()
            spec.params(self["model.layers"], 0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self["optim.l2_scope"] not in L2_SCOPES:
            raise ConfigError(f"optim.l2_scope must be one of {L2_SCOPES}")
        if self["optim.lr"] <= 0 or self["optim.l2"] < 0:
            raise ConfigError("optim.lr must be > 0 and optim.l2 >= 0")
        if self["optim.epochs"] < 1 or self["optim.patience"] < 1:
            raise ConfigError("optim.epochs and optim.patience must be >= 1")
        if not self["run.seeds"]:
            raise ConfigError("run.seeds must list at least one seed")
        if len(set(self["run.seeds"])) != len(self["run.seeds"]):
            raise ConfigError("run.seeds contains duplicates")
        if self["men.trials"] < 1:
            raise ConfigError("men.trials must be >= 1")
        if spec.method != "nodrop":
            for k in ("sampler.p_min", "sampler.p_max_prime"):
                v = self[k]
                if v != 0.0 and not any(abs(v - g) < 1e-9 for g in RATE_GRID):
                    warnings.warn(f"{k} = {v} is off the usual search grid {RATE_GRID}", UserWarning, stacklevel=3)


# --- presets ------------------------------------------------------------------------------

# (dataset, mode, backbone, layers, hidden, lr, l2, p_min, p_max', norm, dropout, bn, loop, alpha)
APPENDIX_ROWS = [
    ("cora", "full", "gcn", 2, 256, 0.004, 5e-4, 0.1, 0.4, "ARW", 0.3, False, False, 0.1),
    ("cora", "full", "resgcn", 4, 256, 0.004, 5e-3, 0.1, 0.3, "ARW", 0.1, False, True, 0.1),
    ("cora", "full", "jknet", 8, 256, 0.006, 8e-4, 0.5, 0.6, "ARW", 0.8, False, True, 0.1),
    ("cora", "full", "appnp", 32, 64, 0.004, 5e-5, 0.5, 1.0, "ARW", 0.5, False, False, 0.2),
    ("citeseer", "full", "gcn", 2, 256, 0.006, 1e-3, 0.4, 0.9, "AN", 0.5, False, True, 0.1),
    ("citeseer", "full", "resgcn", 16, 256, 0.010, 5e-5, 0.5, 0.7, "ANS", 0.3, False, True, 0.1),
    ("citeseer", "full", "jknet", 4, 128, 0.009, 5e-4, 0.2, 0.4, "ANS", 0.8, False, True, 0.1),
    ("citeseer", "full", "appnp", 16, 128, 0.010, 5e-6, 0.6, 0.0, "ARW", 0.5, False, False, 0.5),
    ("pubmed", "full", "gcn", 2, 256, 0.001, 1e-3, 0.1, 0.4, "ANS", 0.8, True, True, 0.1),
    ("pubmed", "full", "resgcn", 8, 256, 0.003, 1e-3, 0.1, 0.4, "AN", 0.8, True, True, 0.1),
    ("pubmed", "full", "jknet", 8, 128, 0.005, 1e-4, 0.6, 0.9, "ARW", 0.8, True, True, 0.1),
    ("pubmed", "full", "appnp", 8, 128, 0.008, 5e-5, 0.9, 0.6, "ARW", 0.3, False, False, 0.5),
    ("cora", "semi", "gcn", 4, 256, 0.009, 1e-3, 0.8, 0.2, "ANS", 0.8, False, False, 0.1),
    ("cora", "semi", "resgcn", 8, 64, 0.007, 5e-5, 0.6, 1.0, "ARW", 0.8, False, False, 0.1),
    ("cora", "semi", "jknet", 64, 256, 0.001, 1e-3, 0.05, 1.0, "AN", 0.8, False, False, 0.1),
    ("cora", "semi", "appnp", 8, 64, 0.010, 8e-4, 0.9, 0.8, "NA", 0.5, False, False, 0.1),
    ("citeseer", "semi", "gcn", 2, 128, 0.009, 1e-3, 0.8, 0.8, "ANS", 0.8, False, False, 0.1),
    ("citeseer", "semi", "resgcn", 64, 64, 0.007, 1e-3, 0.6, 0.6, "ARW", 0.8, False, False, 0.1),
    ("citeseer", "semi", "jknet", 8, 128, 0.007, 1e-3, 0.6, 0.0, "ARW", 0.8, False, False, 0.1),
    ("citeseer", "semi", "appnp", 32, 64, 0.010, 8e-4, 0.9, 0.4, "NA", 0.5, False, False, 0.1),
    ("pubmed", "semi", "gcn", 4, 256, 0.005, 1e-3, 0.4, 0.5, "NA", 0.8, False, False, 0.1),
    ("pubmed", "semi", "resgcn", 8, 128, 0.007, 1e-3, 0.6, 1.0, "ARW", 0.8, False, False, 0.1),
    ("pubmed", "semi", "jknet", 32, 64, 0.007, 1e-3, 0.6, 0.8, "ARW", 0.8, False, False, 0.1),
    ("pubmed", "semi", "appnp", 64, 256, 0.004, 1e-4, 0.3, 0.2, "ANS", 0.1, False, False, 0.5),
    ("coauthor_cs", "semi", "gcn", 2, 128, 0.006, 1e-3, 0.2, 0.7, "ARW", 0.5, False, True, 0.1),
    ("coauthor_cs", "semi", "resgcn", 16, 128, 0.009, 5e-4, 0.05, 0.2, "ARW", 0.1, False, True, 0.1),
    ("coauthor_cs", "semi", "jknet", 8, 128, 0.003, 5e-5, 0.8, 0.2, "ANS", 0.5, False, True, 0.1),
    ("coauthor_cs", "semi", "appnp", 8, 64, 0.008, 5e-5, 0.4, 0.2, "AN", 0.5, False, False, 0.2),
    ("coauthor_physics", "semi", "gcn", 4, 256, 0.002, 5e-5, 0.3, 0.3, "AN", 0.1, False, True, 0.1),
    ("coauthor_physics", "semi", "resgcn", 16, 256, 0.006, 1e-5, 0.05, 1.0, "ANS", 0.3, False, False, 0.1),
    ("coauthor_physics", "semi", "jknet", 8, 256, 0.008, 1e-5, 0.7, 0.8, "ANS", 0.8, False, False, 0.1),
    ("coauthor_physics", "semi", "appnp", 16, 64, 0.005, 8e-6, 0.7, 0.5, "AN", 0.5, False, False, 0.2),
    ("amazon_photos", "semi", "gcn", 4, 128, 0.006, 1e-5, 0.2, 0.1, "FOG", 0.5, False, True, 0.1),
    ("amazon_photos", "semi", "resgcn", 4, 256, 0.006, 1e-4, 0.3, 0.8, "FOG", 0.8, False, True, 0.1),
    ("amazon_photos", "semi", "jknet", 8, 256, 0.010, 1e-5, 0.4, 0.3, "ARW", 0.5, False, True, 0.1),
    ("amazon_photos", "semi", "appnp", 4, 64, 0.010, 1e-5, 0.7, 0.5, "ARW", 0.1, False, False, 0.2),
]


def _appendix_presets() -> dict:
    out = {}
    for ds, mode, bb, L, h, lr, l2, pmin, pmaxp, norm, drop, bn, loop, alpha in APPENDIX_ROWS:
        out[f"{ds}_{mode}_{bb}_dropedgepp_{L}layer"] = {
            "dataset.name": ds, "dataset.mode": mode, "model.backbone": bb, "model.layers": L,
            "model.hidden": h, "optim.lr": lr, "optim.l2": l2, "sampler.method": "dropedge_pp",
            "sampler.p_min": pmin, "sampler.p_max_prime": pmaxp, "model.normalization": norm,
            "model.dropout": drop, "model.batch_norm": bn, "model.self_loop_features": loop,
            "model.alpha": alpha,
        }
    return out


PRESETS = {
    "cora_semi_gcn_nodrop_2layer": {"model.layers": 2},
    "cora_semi_gcn_nodrop_8layer": {"model.layers": 8},
    "cora_semi_gcn_dropedgepp_8layer": {
        "model.layers": 8, "model.hidden": 64, "model.dropout": 0.5, "model.normalization": "FOG",
        "sampler.method": "dropedge_pp", "sampler.p_min": 0.3, "sampler.p_max_prime": 0.6,
        "optim.lr": 0.005, "optim.l2": 5e-4,
    },
    "cora_semi_gcn_lid_16layer": {
        "model.layers": 16, "model.hidden": 64, "sampler.method": "lid",
        "sampler.p_min": 0.05, "sampler.p_max_prime": 1.0,
    },
    "cora_semi_gcn_dropedge_16layer": {
        "model.layers": 16, "model.hidden": 64, "sampler.method": "dropedge",
        "sampler.p_min": 0.05, "sampler.p_max_prime": 1.0,
    },
    **_appendix_presets(),
}


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return ExperimentConfig.from_mapping(PRESETS[name])


# --- reports ------------------------------------------------------------------------------


def _schema(name: str) -> dict:
    return json.loads(resources.files("dropedgepp").joinpath("schemas", name).read_text(encoding="utf-8"))


def validate_report(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``report`` matches the published schema."""
    import jsonschema

    name = "men_report.schema.json" if report.get("format") == MEN_FORMAT else "run_report.schema.json"
    jsonschema.validate(report, _schema(name))


def graph_fingerprint(graph) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(graph.edges).tobytes())
    h.update(np.ascontiguousarray(graph.features).tobytes())
    h.update(np.ascontiguousarray(graph.labels).tobytes())
    for m in (graph.train_mask, graph.val_mask, graph.test_mask):
        h.update(np.ascontiguousarray(m).tobytes())
    return h.hexdigest()


def version_stamps(graph=None) -> dict:
    out = {"dropedgepp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version()}
    if graph is not None:
        out["data_sha256"] = graph_fingerprint(graph)
    return out


def strip_volatile(report: dict) -> dict:
    """Copy of ``report`` without wall-clock fields (``created`` and every ``timing`` block)."""
    def walk(x):
        if isinstance(x, dict):
            return {k: walk(v) for k, v in x.items() if k not in ("created", "timing")}
        if isinstance(x, list):
            return [walk(v) for v in x]
        return x

    return walk(report)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _mean_std(xs) -> tuple[float, float]:
    a = np.asarray(xs, dtype=np.float64)
    return float(a.mean()), float(a.std())


def run_seed(config: ExperimentConfig, graph, seed: int, checkpoint_dir=None) -> dict:
    """Train and evaluate one seed; the returned record is part of the run report.

    With ``checkpoint_dir`` the best-validation parameters are saved as
    ``seed<k>.npz`` there.
    """
    model = config.model()
    state = train(model, graph, config.sampler(), seed, config.options())
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
        save_checkpoint(Path(checkpoint_dir) / f"seed{seed}.npz", model, state.best_tensors(),
                        state.rng_state, config.sampler())
    logits, hidden = predict(state, graph, return_hidden=True)
    dist = None
    if model.layers >= 5 and model.backbone != "appnp":
        dist = layer_distance(hidden)
    # entry l is |H_{l+1} - H_l|_F; null where the widths differ
    per_layer = [None if np.isnan(d) else float(d) for d in layer_distances(hidden)]
    epochs = max(state.epoch, 1)
    return {
        "seed": int(seed),
        "test_acc": evaluate(state, graph, "test"),
        "val_acc": evaluate(state, graph, "val"),
        "train_acc": evaluate(state, graph, "train"),
        "best_epoch": int(state.best_epoch),
        "epochs_run": int(state.epoch),
        "best_val_loss": float(state.best_val_loss),
        "layer_distance": dist,
        "layer_distances": per_layer,
        "curves": {k: [float(v) for v in vals] for k, vals in state.curves.items()},
        "sampler_notes": list(state.sampler_notes),
        "timing": {
            "sampling_s": state.sampling_time,
            "training_s": state.training_time,
            "eval_s": state.eval_time,
            "sampling_per_epoch_s": state.sampling_time / epochs,
            "epoch_s": (state.sampling_time + state.training_time) / epochs,
        },
    }


def cmd_train(config: ExperimentConfig, graph=None, write: bool = True, checkpoint_dir=None) -> dict:
    """Run every seed (in seed order), assemble the report and optionally write it."""
    if graph is None:
        graph = load_dataset(config.dataset(), config["dataset.row_normalize"])
    runs = [run_seed(config, graph, s, checkpoint_dir) for s in config["run.seeds"]]
    acc_mean, acc_std = _mean_std([r["test_acc"] for r in runs])
    val_mean, val_std = _mean_std([r["val_acc"] for r in runs])
    sampling = sum(r["timing"]["sampling_s"] for r in runs)
    training = sum(r["timing"]["training_s"] for r in runs)
    epochs = sum(max(r["epochs_run"], 1) for r in runs)
    dists = [r["layer_distance"] for r in runs if r["layer_distance"] is not None]
    report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "created": _now(),
        "config": config.as_dict(),
        "versions": version_stamps(graph),
        "runs": runs,
        "summary": {
            "test_acc_mean": acc_mean,
            "test_acc_std": acc_std,
            "val_acc_mean": val_mean,
            "val_acc_std": val_std,
            "layer_distance_mean": float(np.mean(dists)) if dists else None,
            "final_val_loss_mean": float(np.mean([r["curves"]["val_loss"][-1] for r in runs])),
        },
        "men": None,
        "timing": {
            "sampling_s": sampling,
            "training_s": training,
            "sampling_per_epoch_s": sampling / epochs,
            "epoch_s": (sampling + training) / epochs,
            "sampling_fraction": sampling / (sampling + training) if sampling + training > 0 else 0.0,
        },
    }
    if write:
        write_report(report, config)
    return report


def _output_path(config: ExperimentConfig, kind: str) -> Path:
    name = config["run.name"] or (
        f"{config['dataset.name']}_{config['dataset.mode']}_{config['model.backbone']}"
        f"_{config['sampler.method']}_{config['model.layers']}layer"
    )
    return Path(config["run.output_dir"]) / f"{name}.{kind}.json"


def write_report(report: dict, config: ExperimentConfig, path=None) -> Path:
    validate_report(report)
    p = Path(path) if path else _output_path(config, "men" if report["format"] == MEN_FORMAT else "report")
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return p


def cmd_men(config: ExperimentConfig, graph=None, methods=None, write: bool = True) -> dict:
    """MEN / MEN* statistics for sampled schedules of one or more methods.

    Trial ``t`` of every method uses sampler seed ``t`` so methods are paired.
    """
    if graph is None:
        graph = load_dataset(config.dataset(), config["dataset.row_normalize"])
    methods = list(methods or [config["sampler.method"]])
    spec = config.sampler()
    L = config["model.layers"]
    loops = config["men.self_loops"]
    out = {}
    for m in methods:
        scheds = []
        for t in range(config["men.trials"]):
            s = ScheduleSampler(graph, m, spec.params(L, t))
            scheds.append(s())
        out[m] = men_report(scheds, loops, m).to_dict()
    report = {
        "format": MEN_FORMAT,
        "version": REPORT_VERSION,
        "created": _now(),
        "config": config.as_dict(),
        "versions": version_stamps(graph),
        "methods": out,
    }
    if write:
        write_report(report, config)
    return report


def load_report(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"report not found: {p}")
    report = json.loads(p.read_text(encoding="utf-8"))
    validate_report(report)
    return report


def cmd_curves(report_path, out_dir=None) -> list[Path]:
    """Write ``<stem>.curves.csv`` (per-epoch mean/std over seeds) and
    ``<stem>.distance.csv`` (per-layer mean/std of |H_{l+1} - H_l|_F over seeds)."""
    report = load_report(report_path)
    if report["format"] != REPORT_FORMAT:
        raise ValueError(f"{report_path}: curves need a run report, got {report['format']}")
    src = Path(report_path)
    out_dir = Path(out_dir) if out_dir else src.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = src.name[: -len(".report.json")] if src.name.endswith(".report.json") else src.stem
    runs = report["runs"]
    keys = ("train_loss", "val_loss", "val_acc")
    n_epochs = max(len(r["curves"]["train_loss"]) for r in runs)
    paths = []
    p = out_dir / f"{stem}.curves.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "n_seeds"] + [f"{k}_{s}" for k in keys for s in ("mean", "std")])
        for e in range(n_epochs):
            row = [e + 1]
            alive = [r for r in runs if len(r["curves"]["train_loss"]) > e]
            row.append(len(alive))
            for k in keys:
                m, s = _mean_std([r["curves"][k][e] for r in alive])
                row += [repr(m), repr(s)]
            w.writerow(row)
    paths.append(p)
    per_layer = [r.get("layer_distances") or [] for r in runs]
    n_layers = max(len(d) for d in per_layer)
    if n_layers:
        p = out_dir / f"{stem}.distance.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["layer", "n_seeds", "distance_mean", "distance_std"])
            for l in range(n_layers):
                vals = [d[l] for d in per_layer if len(d) > l and d[l] is not None]
                if not vals:
                    continue
                m, sd = _mean_std(vals)
                w.writerow([l, len(vals), repr(m), repr(sd)])
        paths.append(p)
    return paths


def config_from_sources(config_path=None, preset=None, overrides: dict | None = None) -> ExperimentConfig:
    if config_path and preset:
        raise ConfigError("give either a config file or a preset, not both")
    if config_path:
        base = ExperimentConfig.from_file(config_path)
    elif preset:
        base = load_preset(preset)
    else:
        base = ExperimentConfig.from_mapping({})
    if overrides:
        d = base.as_dict()
        for k, v in overrides.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            d[k] = v
        base = ExperimentConfig.from_mapping(d)
    return base

