"""Knowledge-driven joint attention.

Entity text features query the scan patch tokens (cross attention), a
relation projector predicts a soft implicit adjacency, and a masked
self-attention over entities mixes features along the fused adjacency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as N
from .graph import fuse
from .numerics import FeedForward, LayerNorm, Linear, Module, MultiHeadAttention, Tensor

MASK_EPS = 1e-30


class DegenerateMaskError(ValueError):
    """A row of the adjacency mask has no entry above the floor."""


class MaskedSelfBlock(Module):
    def __init__(self, d_h: int, heads: int, ffn_hidden: int, rng: np.random.Generator, activation: str):
        self.attn = MultiHeadAttention(d_h, d_h, d_h, heads, rng)
        self.ln1 = LayerNorm(d_h)
        self.ffn = FeedForward(d_h, ffn_hidden, rng, activation)
        self.ln2 = LayerNorm(d_h)


class KJAParams(Module):
    """All learnable weights of the joint-attention module.

    ``w_rp`` and ``b_rp`` are scalars so the predicted adjacency stays
    symmetric.
    """

    def __init__(self, d_w: int, d_s: int, d_h: int, rng: np.random.Generator, heads: int = 8,
                 d_r: int | None = None, ffn_hidden: int | None = None, depth: int = 1,
                 activation: str = "gelu"):
        if d_h % heads:
            raise ValueError(f"d_h={d_h} must be divisible by heads={heads}")
        d_r = d_h if d_r is None else d_r
        ffn_hidden = 2 * d_h if ffn_hidden is None else ffn_hidden
        self.d_w, self.d_s, self.d_h, self.heads = d_w, d_s, d_h, heads
        self.cross = MultiHeadAttention(d_w, d_s, d_h, heads, rng)
        self.cross_ffn = FeedForward(d_h, ffn_hidden, rng, activation)
        self.relation = Linear(d_h, d_r, rng)
        self.w_rp = N.Tensor(1.0 / d_r, requires_grad=True)
        self.b_rp = N.Tensor(0.0, requires_grad=True)
        self.blocks = [MaskedSelfBlock(d_h, heads, ffn_hidden, rng, activation) for _ in range(depth)]
        self.entity_proj = Linear(d_h, d_w, rng)


def flatten_scans(V_f) -> Tensor:
    """(..., N, P, d_s) -> (..., N*P, d_s): every patch of every scan is a token."""
    V_f = N.as_tensor(V_f)
    if V_f.ndim < 3:
        raise N.ShapeError(f"cross_attend: scan features must be (N, P, d_s), got {V_f.shape}")
    *lead, n, p, d = V_f.shape
    if n == 0 or p == 0:
        raise N.ShapeError("cross_attend: empty scan set")
    return V_f.reshape(*lead, n * p, d)


def cross_attend(T_f, V_f, params: KJAParams, return_probs: bool = False):
    """Entity text features attend over scan patch tokens, then a plain FFN."""
    T_f = N.as_tensor(T_f)
    tokens = flatten_scans(V_f)
    if tokens.shape[-1] != params.d_s:
        raise N.ShapeError(f"cross_attend: scan width {tokens.shape[-1]} != d_s {params.d_s}")
    if T_f.shape[-1] != params.d_w:
        raise N.ShapeError(f"cross_attend: text width {T_f.shape[-1]} != d_w {params.d_w}")
    ctx, probs = params.cross.attend(T_f, tokens)
    out = params.cross_ffn(params.cross.out_proj(ctx))
    return (out, probs) if return_probs else out


def predict_implicit(T_f_prime, params: KJAParams) -> Tensor:
    """``sigmoid(w_rp * R R^T + b_rp)`` with ``R`` the projected entity features."""
    R = params.relation(T_f_prime)
    gram = N.matmul(R, R.T)
    return N.sigmoid(gram * params.w_rp + params.b_rp)


def mask_bias(M_adj, eps: float = MASK_EPS) -> Tensor:
    """Additive pre-softmax bias ``log(max(M_adj, eps))``."""
    M_adj = N.as_tensor(M_adj)
    if (M_adj.data < 0).any():
        raise DegenerateMaskError("adjacency mask has negative entries")
    dead = (M_adj.data < eps).all(axis=-1)
    if dead.any():
        rows = np.argwhere(dead)[:, -1].tolist()
        raise DegenerateMaskError(f"adjacency rows {rows} have no entry >= {eps:g}")
    return N.log(N.clip(M_adj, eps, None))


def masked_self_attend(T_f_prime, M_adj, params: KJAParams, eps: float = MASK_EPS,
                       return_probs: bool = False):
    """Knowledge-masked self-attention with post-norm residuals around attention and FFN."""
    bias = mask_bias(M_adj, eps)
    bias = bias.reshape(*bias.shape[:-2], 1, *bias.shape[-2:])
    x = N.as_tensor(T_f_prime)
    probs = []
    for block in params.blocks:
        ctx, p = block.attn.attend(x, x, bias=bias)
        e_att = block.ln1(block.attn.out_proj(ctx) + x)
        x = block.ln2(block.ffn(e_att) + e_att)
        probs.append(p)
    return (x, probs) if return_probs else x


def project_entities(E_f, params: KJAParams) -> Tensor:
    """Drop the global entity row and map to the decoder embedding width."""
    E_f = N.as_tensor(E_f)
    return params.entity_proj(E_f[..., 1:, :])


def combine_masks(M_E, M_I, alpha_E: float, alpha_I: float, use_M_E: bool, use_M_I: bool, size: int):
    """Select the attention mask for an ablation arm; all-ones when neither source is on."""
    if use_M_E and use_M_I:
        return fuse(N.as_tensor(M_E), M_I, alpha_E, alpha_I)
    if use_M_E:
        return N.as_tensor(M_E) * alpha_E
    if use_M_I:
        return M_I * alpha_I
    return N.Tensor(np.ones((size, size)))


@dataclass
class KJAOutput:
    T_f_prime: Tensor
    M_I: Tensor | None
    M_adj: Tensor
    E_f: Tensor
    E_e: Tensor


def kja_forward(T_f, V_f, M_E, params: KJAParams, alpha_E: float = 0.9, alpha_I: float = 0.1,
                use_M_E: bool = True, use_M_I: bool = True) -> KJAOutput:
    T_fp = cross_attend(T_f, V_f, params)
    M_I = predict_implicit(T_fp, params) if use_M_I else None
    M_adj = combine_masks(M_E, M_I, alpha_E, alpha_I, use_M_E, use_M_I, T_fp.shape[-2])
    E_f = masked_self_attend(T_fp, M_adj, params)
    return KJAOutput(T_fp, M_I, M_adj, E_f, project_entities(E_f, params))
