import math

import numpy as np
import pytest

import oracles
from entprompt import numerics as N
from entprompt import status as S
from entprompt.text import build_vocabulary


def loop_bce(p, y):
    p = min(max(p, S.PROB_CLAMP), 1 - S.PROB_CLAMP)
    return -(y * math.log(p) + (1 - y) * math.log(1 - p))


def random_batch(seed, b=4, k=3):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.02, 0.98, size=(b, k)), rng.integers(0, 2, size=(b, k))


# --- classifier -----------------------------------------------------------
def test_classify_zero_logits_half():
    c = S.EntityClassifier(3, 4, 5, np.random.default_rng(0))
    c.head_w.data[:] = 0.0
    np.testing.assert_array_equal(S.classify(np.ones((3, 4)), c).data, 0.5)


def test_classify_saturates():
    c = S.EntityClassifier(2, 4, 5, np.random.default_rng(0))
    c.head_w.data[:] = 0.0
    c.head_b.data[:] = 20.0
    assert (S.classify(np.zeros((2, 4)), c).data > 1 - 1e-8).all()


def test_classify_oracle_and_global_row_dropped():
    c = S.EntityClassifier(3, 4, 5, np.random.default_rng(1))
    c.head_b.data[:] = [0.1, -0.3, 0.2]
    E_f = np.random.default_rng(2).normal(size=(4, 4))
    h = oracles.lin(c.hidden, E_f[1:])
    ref = [oracles.sigmoid(sum(h[i, j] * c.head_w.data[i, j] for j in range(5)) + c.head_b.data[i]) for i in range(3)]
    np.testing.assert_allclose(S.classify(E_f, c).data, ref, atol=1e-12)
    np.testing.assert_array_equal(S.classify(E_f, c).data, S.classify(E_f[1:], c).data)
    with pytest.raises(N.ShapeError):
        S.classify(np.zeros((7, 4)), c)


# --- losses ---------------------------------------------------------------
def test_per_entity_loss_perfect_and_half():
    y = np.array([[1, 0], [0, 1]])
    assert S.per_entity_loss(y.astype(float), y).max() < 1e-11
    np.testing.assert_allclose(S.per_entity_loss(np.full((2, 2), 0.5), y), math.log(2), atol=1e-15)


def test_per_entity_loss_loop_oracle():
    for seed in range(20):
        p, y = random_batch(seed)
        ref = [sum(loop_bce(p[j, i], y[j, i]) / 4 for j in range(4)) for i in range(3)]
        np.testing.assert_allclose(S.per_entity_loss(p, y), ref, rtol=0, atol=1e-12)


def test_classification_loss_oracle_and_identity():
    for seed in range(20):
        p, y = random_batch(seed)
        ref = sum(loop_bce(p[j, i], y[j, i]) for j in range(4) for i in range(3)) / 12
        L = S.classification_loss(p, y).item()
        assert L == pytest.approx(ref, abs=1e-12)
        assert S.per_entity_loss(p, y).sum() == pytest.approx(3 * L, abs=1e-10)


def test_classification_loss_analytic():
    y = np.array([[1, 0, 1]])
    assert S.classification_loss(np.full((1, 3), 0.5), y).item() == pytest.approx(math.log(2), abs=1e-15)
    assert S.classification_loss(y.astype(float), y).item() < 1e-11


def test_clamp_avoids_infinite_loss():
    e = S.per_entity_loss(np.array([[0.0, 1.0]]), np.array([[1, 0]]))
    assert np.isfinite(e).all() and e[0] == pytest.approx(-math.log(1e-12), rel=1e-9)


def test_loss_shape_and_weight_errors():
    with pytest.raises(N.ShapeError):
        S.per_entity_loss(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        S.per_entity_loss(np.full((2, 2), 0.5), np.zeros((2, 2)), weights=[1.0])


def test_classification_loss_gradient():
    p = N.Tensor(np.random.default_rng(3).uniform(0.1, 0.9, size=(3, 2)), requires_grad=True)
    y = np.array([[1, 0], [0, 0], [1, 1]])
    assert N.grad_check(lambda: S.classification_loss(p, y), [p]).passed


# --- saturation and buckets -----------------------------------------------
def test_saturate_values():
    assert S.saturate(0.0) == 0.0
    assert abs(S.saturate(math.log(2)) - 0.5) <= 1e-12
    assert S.saturate(5.0) == pytest.approx(1 - math.exp(-5), abs=1e-15)
    assert 0.99326 < S.saturate(5.0) < 0.99327
    with pytest.raises(ValueError):
        S.saturate([-0.1])


def test_saturate_strictly_monotone():
    x = np.sort(np.random.default_rng(0).exponential(size=200))
    assert (np.diff(S.saturate(x)) > 0).all()


@pytest.mark.parametrize("score,word", [
    (0.0, "proficient"), (0.1999, "proficient"), (0.2, "good"), (0.4, "moderate"), (0.5, "moderate"),
    (0.6, "limited"), (0.8, "poor"), (1.0, "poor")])
def test_bucket_table(score, word):
    assert S.bucket([score]) == [word]


def test_bucket_total_on_grid_and_errors():
    grid = np.linspace(0, 1, 1001)
    words = S.bucket(grid)
    assert set(words) == set(S.STATUS_WORDS)
    for w, lo, hi in zip(S.STATUS_WORDS, (0, .2, .4, .6, .8), (.2, .4, .6, .8, 1.0001)):
        assert all((lo <= g < hi) == (x == w) for g, x in zip(grid, words))
    with pytest.raises(ValueError):
        S.bucket([1.2])


# --- embeddings -----------------------------------------------------------
def test_embed_status_lookup_and_mean():
    v = build_vocabulary(["[global]", "a", "b"])
    table = np.random.default_rng(0).normal(size=(len(v), 6))
    S_e = S.embed_status(["good", "proficient", "moderate"], table, v.word_ids)
    np.testing.assert_array_equal(S_e[0], table[v.id("good")])
    np.testing.assert_allclose(S_e[1], (table[v.id("profi")] + table[v.id("##cient")]) / 2, atol=1e-15)
    np.testing.assert_allclose(S_e[2], (table[v.id("moder")] + table[v.id("##ate")]) / 2, atol=1e-15)
    with pytest.raises(KeyError):
        S.embed_status(["brilliant"], table, v.word_ids)


def test_embed_status_is_detached():
    v = build_vocabulary(["[global]", "a"])
    table = N.Tensor(np.ones((len(v), 4)), requires_grad=True)
    assert isinstance(S.embed_status(["poor"], table, v.word_ids), np.ndarray)


# --- EMA ------------------------------------------------------------------
def test_ema_rules():
    E = np.array([0.3, 0.7])
    np.testing.assert_array_equal(S.update_ema(E, np.zeros(2), 0.0), E)
    state = np.zeros(2)
    for _ in range(2000):
        state = S.update_ema(E, state, 0.99)
    np.testing.assert_allclose(state, E, atol=1e-8)
    with pytest.raises(ValueError):
        S.update_ema(E, state, 1.0)


def test_ema_three_step_recurrence():
    seq = [np.array([0.5]), np.array([0.2]), np.array([0.9])]
    state = np.array([0.0])
    for x in seq:
        state = S.update_ema(x, state, 0.9)
    # 0.1*0.9 + 0.9*(0.1*0.2 + 0.9*(0.1*0.5))
    assert state[0] == pytest.approx(0.09 + 0.9 * (0.02 + 0.9 * 0.05), abs=1e-15)
