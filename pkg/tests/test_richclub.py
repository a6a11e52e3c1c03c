import itertools

import networkx as nx
import numpy as np
import pytest

from homophily.graph import Network
from homophily.richclub import normalized_rich_club, rich_club_coefficient, swap_convergence_drift
from homophily.synthetic import erdos_renyi, planted_rich_club, random_digraph


def complete(n, directed=True):
    pairs = list(itertools.permutations(range(n), 2)) if directed else list(itertools.combinations(range(n), 2))
    s, d = zip(*pairs)
    return Network(n, s, d)


def brute_phi(net, mode, k):
    indeg = np.bincount(net.dst, minlength=net.n)
    outdeg = np.bincount(net.src, minlength=net.n)
    deg = {"in": indeg, "out": outdeg, "total": indeg + outdeg}[mode]
    club = {v for v in range(net.n) if deg[v] >= k}
    if len(club) < 2:
        return None
    e = sum(1 for s, d in zip(net.src.tolist(), net.dst.tolist()) if s in club and d in club)
    return e / (len(club) * (len(club) - 1))


def test_k5_undirected_phi_one():
    curve = rich_club_coefficient(complete(5, directed=False), directed=False)
    assert curve.ks.tolist() == [1, 2, 3, 4]
    assert np.all(curve.phi == 1.0)


def test_k6_directed_phi_one():
    curve = rich_club_coefficient(complete(6))
    assert len(curve.ks) > 0 and np.all(curve.phi == 1.0)


def test_path_k2():
    path = Network(4, [0, 1, 2], [1, 2, 3])
    d = rich_club_coefficient(path, directed=False).as_dict()
    assert d[2] == (1.0, 2, 1)


def test_star_k2_undefined():
    star = Network(5, [0, 0, 0, 0], [1, 2, 3, 4])
    assert 2 not in rich_club_coefficient(star, directed=False).as_dict()


@pytest.mark.parametrize("mode", ["total", "in", "out"])
def test_directed_matches_brute_force(mode):
    net = random_digraph(60, 400, seed=3)
    curve = rich_club_coefficient(net, mode)
    kmax = int(max(curve.ks)) + 2
    got = curve.as_dict()
    for k in range(1, kmax):
        ref = brute_phi(net, mode, k)
        if ref is None:
            assert k not in got
        else:
            assert got[k][0] == pytest.approx(ref, abs=1e-15)


def test_undirected_matches_networkx():
    net = erdos_renyi(120, 0.08, seed=1, directed=False)
    g = nx.Graph()
    g.add_nodes_from(range(net.n))
    g.add_edges_from(zip(net.src.tolist(), net.dst.tolist()))
    ref = nx.rich_club_coefficient(g, normalized=False)
    curve = rich_club_coefficient(net, directed=False)
    # networkx keys k mean "degree > k"
    for k, phi, size in zip(curve.ks, curve.phi, curve.n_nodes):
        if size >= 2 and (k - 1) in ref:
            assert phi == pytest.approx(ref[k - 1], abs=1e-12)


def test_phi_bounds_and_monotone_edge_counts():
    for seed in range(5):
        curve = rich_club_coefficient(random_digraph(80, 500, seed))
        assert np.all((curve.phi >= 0) & (curve.phi <= 1))
        assert np.all(np.diff(curve.n_edges) <= 0)


def test_undirected_requires_total_mode():
    with pytest.raises(ValueError):
        rich_club_coefficient(complete(4), "in", directed=False)


def test_complete_graph_rho_one():
    res = normalized_rich_club(complete(6), n_random=5, seed=1, n_boot=50)
    np.testing.assert_allclose(res.rho, 1.0)
    assert res.n_randomizations == 5


def test_planted_hub_clique():
    net, cap = planted_rich_club(seed=2)
    res = normalized_rich_club(net, n_random=20, seed=3, n_boot=200)
    above = res.ks > cap
    assert above.any()
    assert np.all(res.rho[above] > 1.5)


def test_deterministic_given_seed():
    net = random_digraph(100, 600, seed=7)
    a = normalized_rich_club(net, n_random=5, seed=11, n_boot=100)
    b = normalized_rich_club(net, n_random=5, seed=11, n_boot=100)
    np.testing.assert_array_equal(a.rho, b.rho)
    np.testing.assert_array_equal(a.ci_low, b.ci_low)


def test_ci_brackets_rho_and_traces_recorded():
    net = random_digraph(200, 2000, seed=8)
    res = normalized_rich_club(net, n_random=30, seed=2, n_boot=300)
    assert np.all(res.ci_low <= res.ci_high)
    assert len(res.traces) == 30


def test_doubling_randomizations_moves_rho_less_than_ci_width():
    net = erdos_renyi(400, 0.02, seed=4)
    a = normalized_rich_club(net, n_random=20, seed=5, n_boot=300)
    b = normalized_rich_club(net, n_random=40, seed=5, n_boot=300)
    big = a.empirical.n_nodes[np.isin(a.empirical.ks, a.ks)] >= 50
    width = (a.ci_high - a.ci_low)[big]
    assert np.all(np.abs(a.rho - b.rho)[big] <= width + 1e-12)


def test_absent_levels_flagged():
    # nodes 0,1 are the only ones with out-degree 2 and there is no edge between them,
    # so any randomization keeps club k=2 edgeless
    net = Network(6, [0, 0, 1, 1, 2], [2, 3, 4, 5, 3])
    res = normalized_rich_club(net, "out", n_random=3, seed=0, n_boot=20)
    assert 2 in res.absent
    assert 2 not in res.ks.tolist()


def test_swap_convergence_drift_small_for_er():
    net = erdos_renyi(1000, 0.01, seed=6)
    assert swap_convergence_drift(net, seed=1) < 0.01


def test_swap_convergence_drift_detects_unmixed_chain():
    net, _ = planted_rich_club(seed=1)
    assert swap_convergence_drift(net, seed=2, min_club=5) < 0.01
    assert swap_convergence_drift(net, seed=2, short=0.02, min_club=5) > 0.01


@pytest.mark.parametrize("seed", range(3))
def test_er_rho_within_poisson_band(seed):
    # ER has no rich club: a club holding E internal edges gives |rho - 1| ~ 1/sqrt(E),
    # so a 4-sigma band is the calibrated version of a fixed +-0.1 window
    res = normalized_rich_club(erdos_renyi(2000, 0.01, seed=seed), n_random=20, seed=seed, n_boot=100)
    edges = dict(zip(res.empirical.ks.tolist(), res.empirical.n_edges.tolist()))
    e = np.array([edges[k] for k in res.ks.tolist()], dtype=float)
    keep = e >= 20
    assert keep.sum() > 30
    assert np.all(np.abs(res.rho[keep] - 1.0) <= 4.0 / np.sqrt(e[keep]))
