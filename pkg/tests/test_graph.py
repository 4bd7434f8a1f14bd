import itertools

import numpy as np
import pytest

from entprompt import graph as G


def vocab_of(kinds):
    names = ["[global]"] + [f"e{i}" for i in range(1, len(kinds) + 1)]
    return G.EntityVocabulary(tuple(names), ("global", *kinds))


def rule_interpreter(vocab, t2t, l2l, pairs):
    """Independent oracle: decide every cell by asking which rule (if any) covers it."""
    n = vocab.size
    edges = {frozenset(e) for e in list(t2t) + list(l2l) + list(pairs)}
    out = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        if i == j or i == 0 or j == 0 or frozenset((i, j)) in edges:
            out[i, j] = 1.0
    return out


def test_empty_graph_k2():
    v = vocab_of(("region", "lesion"))
    m = G.build_M_E_train(v, G.ExplicitGraph(v), [])
    np.testing.assert_array_equal(m, [[1, 1, 1], [1, 1, 0], [1, 0, 1]])


def test_single_report_pair():
    v = vocab_of(("region", "lesion"))
    m = G.build_M_E_train(v, G.ExplicitGraph(v), [(1, 2)])
    assert m[1, 2] == m[2, 1] == 1.0


def test_rule_interpreter_toy():
    v = vocab_of(("region", "region", "region", "lesion", "lesion"))
    g = G.ExplicitGraph(v, [(1, 2)], [(4, 5)])
    m = G.build_M_E_train(v, g, [(3, 4)])
    np.testing.assert_array_equal(m, rule_interpreter(v, [(1, 2)], [(4, 5)], [(3, 4)]))
    assert m[1, 3] == 0 and m[3, 5] == 0


def test_train_rejects_bad_pairs():
    v = vocab_of(("region", "lesion", "lesion"))
    g = G.ExplicitGraph(v)
    with pytest.raises(G.GraphError):
        G.build_M_E_train(v, g, [(2, 3)])  # lesion-lesion
    with pytest.raises(G.GraphError):
        G.build_M_E_train(v, g, [(1, 9)])


def test_infer_all_zero_counts_equals_empty_train():
    v = vocab_of(("region", "region", "lesion"))
    g = G.ExplicitGraph(v, [(1, 2)], [], total_samples=10)
    np.testing.assert_array_equal(G.build_M_E_infer(v, g), G.build_M_E_train(v, g, []))


def test_infer_threshold_rule():
    v = vocab_of(("region", "lesion"))
    g = G.ExplicitGraph(v, cooccurrence=[[6]], total_samples=10, tau=0.5)
    assert G.build_M_E_infer(v, g)[1, 2] == 1.0
    g = G.ExplicitGraph(v, cooccurrence=[[4]], total_samples=10, tau=0.5)
    assert G.build_M_E_infer(v, g)[1, 2] == 0.0


def test_infer_randomised_thresholding_oracle():
    rng = np.random.default_rng(0)
    v = vocab_of(("region", "lesion", "region", "lesion", "lesion"))
    regions, lesions = v.regions, v.lesions
    for _ in range(50):
        total = int(rng.integers(1, 40))
        counts = rng.integers(0, total + 1, size=(len(regions), len(lesions)))
        g = G.ExplicitGraph(v, [(1, 3)], [(2, 4)], counts, total, tau=0.3)
        pairs = [(regions[a], lesions[b]) for a in range(len(regions)) for b in range(len(lesions))
                 if counts[a, b] / total >= 0.3]
        np.testing.assert_array_equal(G.build_M_E_infer(v, g), rule_interpreter(v, [(1, 3)], [(2, 4)], pairs))


def test_infer_tau_out_of_range():
    v = vocab_of(("region", "lesion"))
    with pytest.raises(G.GraphError):
        G.build_M_E_infer(v, G.ExplicitGraph(v, tau=1.5))


def test_infer_takes_no_report_argument():
    import inspect
    assert list(inspect.signature(G.build_M_E_infer).parameters) == ["vocab", "graph"]


def test_matrix_invariants():
    v = vocab_of(("region", "lesion", "region", "lesion"))
    g = G.ExplicitGraph(v, [(1, 3)], [(2, 4)], [[3, 0], [1, 2]], 5)
    for m in (G.build_M_E_train(v, g, [(1, 2)]), G.build_M_E_infer(v, g)):
        np.testing.assert_array_equal(m, m.T)
        assert set(np.unique(m)) <= {0.0, 1.0}
        assert (m[0] == 1).all() and (m[:, 0] == 1).all() and (np.diag(m) == 1).all()


def test_fuse_examples():
    assert G.fuse(np.array([[1.0]]), np.array([[0.5]]))[0, 0] == pytest.approx(0.95, abs=1e-15)
    rng = np.random.default_rng(1)
    A, B = rng.integers(0, 2, size=(6, 6)).astype(float), rng.random((6, 6))
    np.testing.assert_array_equal(G.fuse(A, B, 0.7, 0.0), A * 0.7)
    expected = np.array([[0.9 * A[i, j] + 0.1 * B[i, j] for j in range(6)] for i in range(6)])
    np.testing.assert_allclose(G.fuse(A, B), expected, rtol=0, atol=1e-15)
    lhs = G.fuse(A, B, 0.2, 0.3) + G.fuse(A, B, 0.5, 0.1)
    np.testing.assert_allclose(lhs, G.fuse(A, B, 0.7, 0.4), atol=1e-12)


def test_fuse_errors():
    with pytest.raises(G.GraphError):
        G.fuse(np.ones((2, 2)), np.ones((3, 3)))
    with pytest.raises(G.GraphError):
        G.fuse(np.ones((2, 2)), np.ones((2, 2)), -0.1, 0.1)


def test_vocabulary_invariants():
    with pytest.raises(G.GraphError):
        G.EntityVocabulary(("a", "b"), ("region", "lesion"))
    with pytest.raises(G.GraphError):
        G.EntityVocabulary(("[global]",), ("global",))
    with pytest.raises(G.GraphError):
        G.EntityVocabulary(("[global]", "x", "x"), ("global", "region", "lesion"))


def test_graph_edge_validation():
    v = vocab_of(("region", "lesion"))
    with pytest.raises(G.GraphError):
        G.ExplicitGraph(v, edges_t2t=[(1, 2)])
    with pytest.raises(G.GraphError):
        G.ExplicitGraph(v, cooccurrence=[[-1]])
    with pytest.raises(G.GraphError):
        G.ExplicitGraph(v, cooccurrence=[[1, 2]])


def test_graph_file_round_trip(tmp_path):
    v = G.EntityVocabulary(("[global]", "thalamus", "edema", "pons", "hematoma"),
                           ("global", "region", "lesion", "region", "lesion"),
                           ((), ("in", "thalamus"), ("edema", "seen"), ("in", "pons"), ("hematoma", "seen")))
    g = G.ExplicitGraph(v, [(1, 3)], [(2, 4)])
    path = tmp_path / "graph.txt"
    path.write_text(G.dump_graph(g))
    back = G.load_graph(path)
    assert back.vocab == v and back.edges_t2t == [(1, 3)] and back.edges_l2l == [(2, 4)]


def test_graph_file_errors_name_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("entity 0 [global] global\nentity 1 a region\nedge x2y 0 1\n")
    with pytest.raises(G.GraphError, match=":3:"):
        G.load_graph(path)
