"""Repeated propagation drives node features toward a degree-weighted subspace.

With the AN operator, the distance of ``A^l H`` from span(D^{1/2} 1_m)
shrinks at least as fast as ``lambda^l``, where lambda is the second largest
eigenvalue magnitude. Dropping edges lowers how fast that happens.

Run: python3 demos/02_oversmoothing.py
"""

import numpy as np

from dropedgepp.data import karate_graph
from dropedgepp.graph import EdgeSet, connected_components, degrees, normalize
from dropedgepp.men import spectral_gap, subspace_distance

g = karate_graph()
rng = np.random.default_rng(0)
H0 = rng.standard_normal((g.num_nodes, 8))


def decay(edge_set: EdgeSet, depth: int = 16):
    adj = normalize(edge_set, "AN")
    lam, m = spectral_gap(adj)
    comps = connected_components(g.num_nodes, edge_set.pairs())
    d = degrees(edge_set, with_self_loops=True)
    H, out = H0, []
    for _ in range(depth + 1):
        out.append(subspace_distance(H, comps, d))
        H = adj @ H
    return lam, m, np.array(out)


# %% full graph
lam, m, dist = decay(g.full_edge_set())
print(f"full graph: lambda={lam:.4f}, components={m}")
for l in (0, 2, 4, 8, 16):
    print(f"  l={l:2d}  distance={dist[l]:.3e}  bound={dist[0] * lam ** l:.3e}")

# %% half the edges dropped at random
keep = np.zeros(g.num_edges, dtype=bool)
keep[rng.choice(g.num_edges, g.num_edges // 2, replace=False)] = True
lam, m, dist = decay(EdgeSet(g, keep))
print(f"\n50% edges kept: lambda={lam:.4f}, components={m}")
for l in (0, 2, 4, 8, 16):
    print(f"  l={l:2d}  distance={dist[l]:.3e}")
# more components means a bigger convergence subspace, and lambda moves toward 1,
# so the features keep more of their node-specific part at depth
