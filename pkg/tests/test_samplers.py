import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dropedgepp.data import graph_from_raw, random_graph
from dropedgepp.graph import EdgeSet
from dropedgepp.samplers import (
    FALLBACK_NOTE,
    SAMPLERS,
    SamplerParams,
    ScheduleSampler,
    drop_edge,
    dropedge_pp,
    kernel_weights,
    layer_drop_counts,
    lid_layer_sizes,
    round_half_up,
    sample_ldd,
    sample_li,
    sample_lid,
    sample_nodrop,
    sample_shared,
    weighted_keep,
)

from conftest import make_graph
from oracles import inclusion_probs


def three_sigma(p, n):
    return 3 * np.sqrt(p * (1 - p) / n)


class TestParams:
    def test_derived_rates(self):
        p = SamplerParams(0.2, 0.5, 4)
        assert p.p_max == pytest.approx(0.6)
        assert p.delta_p == pytest.approx(0.4 / 3)
        assert p.shared_rate == pytest.approx(0.4)

    def test_single_layer(self):
        p = SamplerParams(0.3, 0.9, 1)
        assert p.delta_p == 0.0
        assert p.shared_rate == 0.3

    @pytest.mark.parametrize("kw", [dict(p_min=1.2), dict(p_max_prime=-0.1), dict(num_layers=0), dict(kernel="cosine")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SamplerParams(**kw)

    def test_round_half_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(0.6 / 3 * 100) == 20
        assert round_half_up(2.4999) == 2


class TestKernels:
    def graph(self, x):
        return make_graph(len(x), [(0, 1)], features=np.asarray(x, dtype=float))

    def test_linear_identical_unit(self):
        w = kernel_weights(self.graph([[0.6, 0.8], [0.6, 0.8]]), "linear")
        assert w[0] == pytest.approx(1.0)

    def test_polynomial_orthogonal(self):
        assert kernel_weights(self.graph([[1, 0], [0, 1]]), "polynomial")[0] == 0.0

    def test_rbf(self):
        w = kernel_weights(self.graph([[1, 0], [0, 1]]), "rbf")
        assert w[0] == pytest.approx(np.exp(-12), rel=1e-12)

    def test_reverse_and_uniform(self):
        g = self.graph([[0.5, 0.5], [1.0, 0.0]])
        assert kernel_weights(g, "reverse")[0] == pytest.approx(0.5)
        assert kernel_weights(g, "uniform")[0] == 1.0

    def test_clamped_nonnegative(self):
        g = self.graph([[1, 0], [-1, 0]])
        assert kernel_weights(g, "linear")[0] == 0.0
        g = self.graph([[2, 0], [1, 0]])
        assert kernel_weights(g, "reverse")[0] == 0.0

    def test_unknown(self):
        with pytest.raises(ValueError):
            kernel_weights(self.graph([[1], [1]]), "cosine")


class TestDropEdge:
    def test_zero_is_identity(self, triangle):
        e = triangle.full_edge_set()
        assert drop_edge(e, 0, rng=0) is e

    def test_drop_all(self, triangle):
        assert drop_edge(triangle.full_edge_set(), 3, rng=0).count == 0

    def test_out_of_range(self, triangle):
        with pytest.raises(ValueError):
            drop_edge(triangle.full_edge_set(), 4, rng=0)
        with pytest.raises(ValueError):
            drop_edge(triangle.full_edge_set(), -1, rng=0)

    def test_subset_and_count(self):
        g = random_graph(20, 60, seed=0)
        rng = np.random.default_rng(0)
        e = drop_edge(g.full_edge_set(), 25, rng=rng)
        f = drop_edge(e, 10, rng=rng)
        assert (e.count, f.count) == (35, 25)
        assert f.issubset(e)

    def test_uniform_marginal(self, triangle):
        rng = np.random.default_rng(1)
        n = 30000
        dropped = np.zeros(3)
        full = triangle.full_edge_set()
        for _ in range(n):
            dropped += ~drop_edge(full, 1, rng=rng).retained
        np.testing.assert_allclose(dropped / n, 1 / 3, atol=0.01)

    def test_weighted_marginal_two_edges(self):
        # path 0-1-2 with linear weights 0.9 and 0.1
        g = make_graph(3, [(0, 1), (1, 2)], features=np.array([[0.9, 0], [1, 0], [0.1, 5]]))
        np.testing.assert_allclose(kernel_weights(g, "linear"), [0.9, 0.1])
        params = SamplerParams(0.5, 0.0, 1, "linear")
        rng = np.random.default_rng(2)
        n = 30000
        kept = sum(dropedge_pp(g, params, rng=rng)[0].retained[0] for _ in range(n))
        assert abs(kept / n - 0.9) <= 0.01

    def test_fallback_when_weights_zero(self, triangle):
        e = drop_edge(triangle.full_edge_set(), 1, weights=np.zeros(3), rng=0)
        assert e.count == 2
        assert FALLBACK_NOTE in e.notes

    def test_weights_shape_checked(self, triangle):
        with pytest.raises(ValueError, match="align"):
            drop_edge(triangle.full_edge_set(), 1, weights=np.ones(2), rng=0)

    def test_negative_weights_rejected(self, triangle):
        with pytest.raises(ValueError, match="nonnegative"):
            drop_edge(triangle.full_edge_set(), 1, weights=np.array([1.0, -1.0, 1.0]), rng=0)

    def test_zero_weight_edges_dropped_first(self):
        g = random_graph(8, 10, seed=1)
        w = np.r_[np.zeros(4), np.ones(6)]
        for s in range(50):
            e = drop_edge(g.full_edge_set(), 4, weights=w, rng=s)
            assert not e.retained[:4].any()

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_weighted_keep_matches_oracle(self, k):
        w = np.array([0.5, 1.0, 2.0, 0.25, 3.0])
        exact = inclusion_probs(w, k)
        rng = np.random.default_rng(k)
        n = 30000
        hits = np.zeros(w.size)
        for _ in range(n):
            idx, _ = weighted_keep(w, k, rng)
            hits[idx] += 1
        freq = hits / n
        assert np.all(np.abs(freq - exact) <= three_sigma(exact, n) + 1e-12)

    def test_weighted_keep_k1_share(self):
        w = np.array([1.0, 2.0, 3.0, 4.0])
        rng = np.random.default_rng(5)
        n = 30000
        hits = np.zeros(4)
        for _ in range(n):
            hits[weighted_keep(w, 1, rng)[0]] += 1
        share = w / w.sum()
        assert np.all(np.abs(hits / n - share) <= three_sigma(share, n))


class TestLayerwise:
    def hundred_edge_graph(self):
        return random_graph(30, 100, seed=11)

    def params(self, L=4):
        # p_min 0.1, p_max 0.7
        return SamplerParams(0.1, 0.6 / 0.9, L)

    def test_lid_sizes(self):
        g = self.hundred_edge_graph()
        s = sample_lid(g, self.params())
        assert s.counts[::-1] == [90, 70, 50, 30]
        assert lid_layer_sizes(100, self.params()) == [30, 50, 70, 90]

    def test_ldd_sizes(self):
        s = sample_ldd(self.hundred_edge_graph(), self.params())
        assert s.counts == [90, 70, 50, 30]

    def test_nesting(self):
        g = self.hundred_edge_graph()
        lid = sample_lid(g, self.params(6))
        ldd = sample_ldd(g, self.params(6))
        for l in range(5):
            assert lid[l].issubset(lid[l + 1])
            assert ldd[l + 1].issubset(ldd[l])

    def test_reversed_ldd_is_lid_shaped(self):
        rev = sample_ldd(self.hundred_edge_graph(), self.params()).reversed()
        for l in range(3):
            assert rev[l].issubset(rev[l + 1])

    def test_li_matches_lid_sizes_and_is_not_nested(self):
        g = self.hundred_edge_graph()
        li = sample_li(g, self.params())
        assert li.counts == sample_lid(g, self.params()).counts
        assert not all(li[l].issubset(li[l + 1]) for l in range(3))

    def test_zero_delta_identical_layers(self):
        g = self.hundred_edge_graph()
        p = SamplerParams(0.4, 0.0, 5)
        for fn in (sample_lid, sample_ldd):
            s = fn(g, p)
            for e in s:
                np.testing.assert_array_equal(e.retained, s[0].retained)
            assert s.counts[0] == 60

    def test_clamping_recorded(self):
        g = random_graph(6, 5, seed=0)
        s = sample_lid(g, SamplerParams(0.5, 1.0, 2))
        # top drops round(2.5) = 3, the next step wants round(2.5) = 3 but only 2 remain
        assert s.counts == [0, 2]
        assert s.clamped_layers == (0,)

    def test_determinism(self):
        g = self.hundred_edge_graph()
        for name, fn in SAMPLERS.items():
            a = fn(g, SamplerParams(0.2, 0.5, 4, seed=9))
            b = fn(g, SamplerParams(0.2, 0.5, 4, seed=9))
            for x, y in zip(a, b):
                np.testing.assert_array_equal(x.retained, y.retained)

    def test_dropedge_pp_no_drop(self):
        g = self.hundred_edge_graph()
        s = dropedge_pp(g, SamplerParams(0.0, 0.0, 3))
        assert s.counts == [100, 100, 100]


class TestShared:
    def test_no_rates_full(self):
        g = random_graph(10, 20, seed=0)
        s = sample_shared(g, SamplerParams(0.0, 0.0, 3))
        assert s.counts == [20, 20, 20]

    def test_single_layer_uses_p_min(self):
        g = random_graph(10, 20, seed=0)
        s = sample_shared(g, SamplerParams(0.3, 0.9, 1))
        assert s.counts == [14]

    def test_half_rate_identical_layers(self):
        g = random_graph(60, 301, seed=0)
        s = sample_shared(g, SamplerParams(0.5, 0.0, 4))
        assert s.counts == [301 - 151] * 4
        assert all(e is s[0] for e in s)

    def test_nodrop(self):
        g = random_graph(10, 20, seed=0)
        assert sample_nodrop(g, SamplerParams(0.5, 0.5, 2)).counts == [20, 20]


def test_uniform_kernel_pp_matches_lid_marginals():
    g = random_graph(8, 12, seed=4)
    p = SamplerParams(0.25, 0.5, 3, "uniform")
    n = 6000
    rng_a, rng_b = np.random.default_rng(0), np.random.default_rng(1)
    fa = np.zeros((3, 12))
    fb = np.zeros((3, 12))
    for _ in range(n):
        fa += np.array([e.retained for e in dropedge_pp(g, p, rng=rng_a)])
        fb += np.array([e.retained for e in sample_lid(g, p, rng=rng_b)])
    # both are exchangeable over edges; compare per-layer rates with a 4-sigma band
    pa, pb = fa / n, fb / n
    tol = 4 * np.sqrt(2 * 0.25 / n)
    assert np.all(np.abs(pa - pb) <= tol)


def test_schedule_sampler_fresh_draws():
    g = random_graph(20, 50, seed=0)
    s = ScheduleSampler(g, "dropedge_pp", SamplerParams(0.2, 0.5, 3, seed=4))
    a, b = s(), s()
    assert a.counts == b.counts
    assert any((x.retained != y.retained).any() for x, y in zip(a, b))
    with pytest.raises(ValueError):
        ScheduleSampler(g, "bogus", SamplerParams())


def expected_sizes(method, m, params):
    L = params.num_layers
    if method == "nodrop":
        return [m] * L
    if method in ("dropedge", "fd"):
        return [m - round_half_up(params.shared_rate * m)] * L
    sizes = lid_layer_sizes(m, params)
    return sizes[::-1] if method == "ldd" else sizes


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(3, 25),
    density=st.floats(0.05, 1.0),
    p_min=st.floats(0.0, 1.0),
    p_max_prime=st.floats(0.0, 1.0),
    L=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
    kernel=st.sampled_from(["linear", "polynomial", "rbf", "reverse", "uniform"]),
)
def test_exact_counts_and_nesting_property(n, density, p_min, p_max_prime, L, seed, kernel):
    m = max(1, int(density * n * (n - 1) / 2))
    g = random_graph(n, m, seed=seed % 1000)
    params = SamplerParams(p_min, p_max_prime, L, kernel, seed=seed)
    for method in SAMPLERS:
        s = ScheduleSampler(g, method, params)()
        assert s.counts == expected_sizes(method, m, params), method
        if method in ("lid", "dropedge_pp"):
            assert all(s[l].issubset(s[l + 1]) for l in range(L - 1))
        if method == "ldd":
            assert all(s[l + 1].issubset(s[l]) for l in range(L - 1))
