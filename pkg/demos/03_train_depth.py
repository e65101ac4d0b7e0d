"""Depth versus accuracy with and without layer-wise edge sampling.

Uses Cora when ``$DROPEDGEPP_DATA`` points at a converted copy, and the
karate club graph otherwise.

Run: python3 demos/03_train_depth.py
"""

import numpy as np

from dropedgepp import DatasetSpec, ModelConfig, SamplerSpec, TrainOptions, evaluate, load_dataset, train
from dropedgepp.backbones import predict
from dropedgepp.data import DatasetError, karate_graph
from dropedgepp.men import layer_distance

try:
    g = load_dataset(DatasetSpec("cora", "semi"))
    name = "cora"
except (DatasetError, FileNotFoundError) as err:
    print(f"cora not found ({err}); using karate")
    g, name = karate_graph(), "karate"

opts = TrainOptions(lr=0.005, l2=5e-4, epochs=200, patience=100)
runs = [
    ("2 layers, no drop", ModelConfig(layers=2, hidden=16), SamplerSpec()),
    ("8 layers, no drop", ModelConfig(layers=8, hidden=16), SamplerSpec()),
    ("8 layers, DropEdge", ModelConfig(layers=8, hidden=64, normalization="FOG"),
     SamplerSpec("dropedge", 0.3, 0.6)),
    ("8 layers, DropEdge++", ModelConfig(layers=8, hidden=64, normalization="FOG"),
     SamplerSpec("dropedge_pp", 0.3, 0.6)),
]

print(f"\n{name}: {g.num_nodes} nodes, {g.num_edges} edges")
for label, cfg, spec in runs:
    accs, dists = [], []
    for seed in range(3):
        state = train(cfg, g, spec, seed=seed, options=opts)
        accs.append(evaluate(state, g, "test"))
        if cfg.layers >= 5:
            _, hidden = predict(state, g, return_hidden=True)
            dists.append(layer_distance(hidden))
    # small layer distance = consecutive hidden states barely change (over-smoothed)
    print(f"{label:22s} test acc {100 * np.mean(accs):5.1f} +- {100 * np.std(accs):4.1f}"
          + (f"   layer distance {np.mean(dists):.3g}" if dists else ""))
