"""Learning-status scorer.

A per-entity classifier sits on the entity visual features. Its batch-level
per-entity loss, squashed by ``1 - exp(-x)``, is the learning-status score;
scores are bucketed into status words whose token embeddings enter the
prompt. Everything downstream of the loss value is detached.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import numerics as N
from .numerics import Linear, Module, Tensor

STATUS_WORDS = ("proficient", "good", "moderate", "limited", "poor")
BOUNDARIES = (0.2, 0.4, 0.6, 0.8)
PROB_CLAMP = 1e-12


class EntityClassifier(Module):
    """Hidden affine shared over entity rows, then one logit per entity."""

    def __init__(self, k: int, d_h: int, d_c: int, rng: np.random.Generator):
        self.hidden = Linear(d_h, d_c, rng)
        self.head_w = N.Tensor(rng.normal(0.0, d_c**-0.5, size=(k, d_c)), requires_grad=True)
        self.head_b = N.Tensor(np.zeros(k), requires_grad=True)

    @property
    def k(self) -> int:
        return self.head_w.shape[0]


def classify(E_f, params: EntityClassifier) -> Tensor:
    """Presence probabilities for the k named entities.

    ``E_f`` may carry the global row (k+1 rows); it is dropped here.
    """
    E_f = N.as_tensor(E_f)
    if E_f.shape[-2] == params.k + 1:
        E_f = E_f[..., 1:, :]
    if E_f.shape[-2] != params.k:
        raise N.ShapeError(f"classify: expected {params.k} entity rows, got {E_f.shape[-2]}")
    E_h = params.hidden(E_f)
    logits = (E_h * params.head_w).sum(axis=-1) + params.head_b
    return N.sigmoid(logits)


def _batch_weights(b: int, weights) -> np.ndarray:
    if weights is None:
        return np.full(b, 1.0 / b)
    w = np.asarray(weights, dtype=float)
    if w.shape != (b,):
        raise ValueError(f"batch weights must have shape ({b},), got {w.shape}")
    return w


def _bce(p, y):
    """Elementwise BCE on Tensors with probabilities clamped away from 0 and 1."""
    p = N.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = N.as_tensor(y)
    return -(y * N.log(p) + (1.0 - y) * N.log(1.0 - p))


def _check_batch(E_p, labels):
    E_p = N.as_tensor(E_p)
    labels = np.asarray(labels, dtype=float)
    if E_p.ndim != 2 or E_p.shape != labels.shape:
        raise N.ShapeError(f"predictions {E_p.shape} and labels {labels.shape} must both be (b, k)")
    return E_p, labels


def per_entity_loss(E_p_batch, labels_batch, weights=None) -> np.ndarray:
    """Batch-level discriminative loss for each entity (k values, detached)."""
    with N.no_grad():
        E_p, labels = _check_batch(E_p_batch, labels_batch)
        w = _batch_weights(E_p.shape[0], weights)
        loss = (_bce(E_p, labels).data * w[:, None]).sum(axis=0)
    return loss


def classification_loss(E_p_batch, labels_batch, weights=None) -> Tensor:
    """Differentiable scalar: batch-weighted BCE, averaged over entities."""
    E_p, labels = _check_batch(E_p_batch, labels_batch)
    w = _batch_weights(E_p.shape[0], weights)
    per_sample = _bce(E_p, labels).mean(axis=1)
    return (per_sample * w).sum()


def saturate(e_s) -> np.ndarray:
    e_s = np.asarray(e_s, dtype=float)
    if (e_s < 0).any():
        raise ValueError("saturate: losses must be non-negative")
    return -np.expm1(-e_s)


def bucket(E_s) -> list[str]:
    """Map scores in [0, 1] to status words; intervals are lower-inclusive, 1.0 maps to the last word."""
    E_s = np.asarray(E_s, dtype=float)
    if ((E_s < 0) | (E_s > 1)).any():
        raise ValueError("bucket: scores must lie in [0, 1]")
    idx = np.searchsorted(BOUNDARIES, E_s, side="right")
    return [STATUS_WORDS[i] for i in np.atleast_1d(idx)]


def embed_words(words: Sequence[str], table: np.ndarray, tokenize) -> np.ndarray:
    """Mean token embedding per word; ``tokenize(word)`` returns token ids."""
    table = np.asarray(getattr(table, "data", table))
    rows = []
    for word in words:
        ids = tokenize(word)
        if not ids:
            raise KeyError(f"word {word!r} has no tokens in the vocabulary")
        rows.append(table[list(ids)].mean(axis=0))
    return np.stack(rows)


def embed_status(S_w: Sequence[str], table, tokenize) -> np.ndarray:
    """Status embeddings (k x d_w), taken from the table values and carrying no gradient."""
    return embed_words(S_w, table, tokenize)


def update_ema(E_s, ema_state, decay: float) -> np.ndarray:
    if not 0.0 <= decay < 1.0:
        raise ValueError(f"EMA decay must lie in [0, 1), got {decay}")
    return decay * np.asarray(ema_state, dtype=float) + (1.0 - decay) * np.asarray(E_s, dtype=float)
