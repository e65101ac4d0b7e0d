"""Layer-wise edge samplers on the karate club graph and how they change MEN.

Run: python3 demos/01_samplers_and_men.py
"""

import numpy as np

from dropedgepp.data import karate_graph
from dropedgepp.men import sample_men
from dropedgepp.samplers import SamplerParams, ScheduleSampler

g = karate_graph()
params = SamplerParams(p_min=0.1, p_max_prime=0.8, num_layers=6, seed=0)
print(f"karate: {g.num_nodes} nodes, {g.num_edges} edges")
print(f"rates: p_min={params.p_min}  p_max={params.p_max:.3f}  shared={params.shared_rate:.3f}\n")

# %% per-layer retained edge counts, input layer first
for method in ("nodrop", "dropedge", "li", "lid", "ldd", "fd", "dropedge_pp"):
    s = ScheduleSampler(g, method, params)()
    print(f"{method:12s}", [len(e) for e in s.layers])

# LID and LDD are nested chains; LI draws each layer on its own.
for method in ("lid", "li"):
    s = ScheduleSampler(g, method, params)()
    nested = all(a.issubset(b) for a, b in zip(s.layers, s.layers[1:]))
    print(f"{method} layers nested input-to-output: {nested}")

# %% MEN over 200 schedules per method
print(f"\n{'method':12s} {'MEN':>10s} {'MEN*':>12s}")
for method in ("nodrop", "dropedge", "li", "lid", "ldd"):
    r = sample_men(ScheduleSampler(g, method, params), 200, method=method)
    print(f"{method:12s} {r.men:10.1f} {r.men_star:12.4g}")

# Accumulating from the input side (LID) keeps the deep layers sparse, so the
# accumulated edge count grows more slowly than with the reversed order (LDD).
r_lid = sample_men(ScheduleSampler(g, "lid", params), 200)
r_ldd = sample_men(ScheduleSampler(g, "ldd", params), 200)
print("\nper-layer accumulated counts")
print("  lid", np.round(r_lid.per_layer_counts, 1))
print("  ldd", np.round(r_ldd.per_layer_counts, 1))
