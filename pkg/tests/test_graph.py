import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homophily.graph import (
    AccountRecord,
    ConvergenceError,
    EdgeListParseError,
    Layer,
    Network,
    degrees,
    eigenvector_centrality,
    entity_map,
    load_edge_list,
    unify_accounts,
    write_edge_list,
)
from homophily.synthetic import erdos_renyi, random_digraph


def labelled_edges(net):
    return {(net.labels[s], net.labels[d]) for s, d in zip(net.src, net.dst)}


def test_load_simple_csv():
    net = load_edge_list(b"a,b\nb,c")
    assert net.n == 3
    assert labelled_edges(net) == {("a", "b"), ("b", "c")}
    assert net.labels == ("a", "b", "c")


def test_empty_stream_gives_empty_network():
    net = load_edge_list(b"")
    assert net.n == 0 and net.n_edges == 0


def test_dedup_flag():
    assert load_edge_list(b"a,b\na,b", dedup=True).n_edges == 1
    assert load_edge_list(b"a,b\na,b", dedup=False).n_edges == 2


def test_self_loops_dropped_by_default():
    net = load_edge_list(b"a,a\na,b")
    assert labelled_edges(net) == {("a", "b")}
    kept = load_edge_list(b"a,a\na,b", drop_self_loops=False)
    assert ("a", "a") in labelled_edges(kept)


def test_tsv_comments_blank_lines_and_header():
    text = "# exported\nsource\ttarget\n\nx\ty\n# mid comment\ny\tz\n"
    net = load_edge_list(text.encode(), format="tsv")
    assert labelled_edges(net) == {("x", "y"), ("y", "z")}


def test_numeric_mode_detects_header_by_non_numeric_field():
    net = load_edge_list(b"who,whom\n1,2\n2,3", numeric_labels=True)
    assert labelled_edges(net) == {("1", "2"), ("2", "3")}
    # without a header the first line is data
    net = load_edge_list(b"1,2\n2,3", numeric_labels=True)
    assert net.n_edges == 2


def test_malformed_line_reports_line_number():
    with pytest.raises(EdgeListParseError) as err:
        load_edge_list(b"a,b\nb,c,d\n")
    assert err.value.line_no == 2


def test_line_order_does_not_change_edge_set():
    lines = [f"n{i},n{(i * 7 + 3) % 11}" for i in range(30)]
    a = load_edge_list("\n".join(lines).encode())
    b = load_edge_list("\n".join(reversed(lines)).encode())
    assert labelled_edges(a) == labelled_edges(b)


def test_write_roundtrip(tmp_path):
    net = random_digraph(40, 120, seed=3)
    path = tmp_path / "e.csv"
    write_edge_list(net, path)
    back = load_edge_list(path.read_bytes())
    assert {(int(s), int(d)) for s, d in labelled_edges(back)} == set(zip(net.src.tolist(), net.dst.tolist()))


def test_network_rejects_out_of_range_endpoint():
    with pytest.raises(ValueError):
        Network(2, [0], [2])


def test_layer_enum_values():
    assert {m.value for m in Layer} == {"following", "starring", "forking", "issues", "pulls", "comments", "other"}


# -- account unification -----------------------------------------------------


def test_shared_gravatar_merges():
    recs = [AccountRecord("r1", gravatar="G"), AccountRecord("r2", gravatar="G")]
    assert unify_accounts(recs) == [["r1", "r2"]]


def test_no_shared_keys_is_identity():
    assert unify_accounts([AccountRecord("r1"), AccountRecord("r2")]) == [["r1"], ["r2"]]


def test_transitive_closure():
    recs = [
        AccountRecord("r1", gravatar="G"),
        AccountRecord("r2", gravatar="G", login="bob", registered="2011-04-02"),
        AccountRecord("r3", login="bob", registered="2011-04-02"),
    ]
    assert unify_accounts(recs) == [["r1", "r2", "r3"]]


def test_login_alone_does_not_merge():
    recs = [AccountRecord("r1", login="bob", registered="2011"), AccountRecord("r2", login="bob", registered="2013")]
    assert len(unify_accounts(recs)) == 2


def test_keys_trimmed_but_case_sensitive():
    recs = [AccountRecord("r1", gravatar=" G "), AccountRecord("r2", gravatar="G"), AccountRecord("r3", gravatar="g")]
    assert unify_accounts(recs) == [["r1", "r2"], ["r3"]]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([None, "A", "B", "C"]), st.sampled_from([None, "x", "y"]),
                          st.sampled_from([None, "2010", "2012"])), min_size=1, max_size=25),
       st.randoms(use_true_random=False))
def test_partition_properties(keys, rnd):
    recs = [AccountRecord(f"r{i}", g, lo, reg) for i, (g, lo, reg) in enumerate(keys)]
    part = unify_accounts(recs)
    flat = [r for block in part for r in block]
    assert sorted(flat) == sorted(r.record_id for r in recs)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert unify_accounts(shuffled) == part
    # brute-force oracle: same block iff connected through shared keys
    block_of = {r: i for i, b in enumerate(part) for r in b}
    for a, b in itertools.combinations(recs, 2):
        direct = (a.gravatar is not None and a.gravatar == b.gravatar) or (
            a.login is not None and a.registered is not None and (a.login, a.registered) == (b.login, b.registered))
        if direct:
            assert block_of[a.record_id] == block_of[b.record_id]


def test_entity_map_rows():
    rows = entity_map([["r1", "r2"], ["r3"]])
    assert rows == [("r1", 0), ("r2", 0), ("r3", 1)]


# -- degrees -----------------------------------------------------------------


def test_single_edge_degrees():
    dv = degrees(Network(2, [0], [1]))
    assert dv.out_degree.tolist() == [1, 0]
    assert dv.in_degree.tolist() == [0, 1]
    assert dv.total.tolist() == [1, 1]


def test_empty_network_degrees():
    assert len(degrees(Network(0, [], [])).total) == 0


def test_three_cycle_degrees():
    dv = degrees(Network(3, [0, 1, 2], [1, 2, 0]))
    assert dv.in_degree.tolist() == [1, 1, 1] and dv.out_degree.tolist() == [1, 1, 1]
    assert dv.total.tolist() == [2, 2, 2]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 200), st.integers(0, 10_000))
def test_degree_sums(n, m, seed):
    m = min(m, n * (n - 1))
    net = random_digraph(n, m, seed)
    dv = degrees(net)
    assert dv.in_degree.sum() == dv.out_degree.sum() == net.n_edges


# -- eigenvector centrality ---------------------------------------------------


def test_cycle_c5_uniform():
    s = [0, 1, 2, 3, 4]
    d = [1, 2, 3, 4, 0]
    x = eigenvector_centrality(Network(5, s, d))
    np.testing.assert_allclose(x, np.full(5, 1 / np.sqrt(5)), atol=1e-9)


def test_star_center_dominates():
    x = eigenvector_centrality(Network(4, [0, 0, 0], [1, 2, 3]))
    assert x[0] > x[1]
    assert x[1] == pytest.approx(x[2], abs=1e-12) and x[2] == pytest.approx(x[3], abs=1e-12)


def test_matches_dense_eigensolve():
    net = erdos_renyi(20, 0.25, seed=5)
    a = np.zeros((20, 20))
    a[net.src, net.dst] = 1
    a = np.maximum(a, a.T)
    w, v = np.linalg.eigh(a)
    lead = np.abs(v[:, np.argmax(w)])
    np.testing.assert_allclose(eigenvector_centrality(net), lead, atol=1e-6)


def test_relabeling_permutes_scores():
    net = erdos_renyi(25, 0.2, seed=9)
    perm = np.random.Generator(np.random.PCG64(1)).permutation(25)
    relabeled = Network(25, perm[net.src], perm[net.dst])
    x = eigenvector_centrality(net)
    y = eigenvector_centrality(relabeled)
    np.testing.assert_allclose(y[perm], x, atol=1e-8)
    assert (x >= 0).all()


def test_non_convergence_carries_last_iterate():
    net = erdos_renyi(30, 0.2, seed=2)
    with pytest.raises(ConvergenceError) as err:
        eigenvector_centrality(net, tolerance=1e-15, max_iterations=2)
    assert err.value.last_iterate.shape == (30,)


def test_centrality_of_empty_network_errors():
    with pytest.raises(ValueError):
        eigenvector_centrality(Network(0, [], []))
