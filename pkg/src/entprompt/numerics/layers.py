"""Parameter containers and the transformer building blocks shared by the
joint-attention module and the decoder."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import Tensor

CAUSAL_FILL = -1e30


class Module:
    """Anything holding Tensors (parameters) and sub-Modules as attributes.

    Parameter paths follow attribute names, e.g. ``layers.0.attn.q_proj.weight``.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, val in vars(self).items():
            path = f"{prefix}{key}"
            if isinstance(val, Tensor):
                yield path, val
            elif isinstance(val, Module):
                yield from val.named_parameters(path + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def trainable_parameters(self) -> dict[str, Tensor]:
        return {k: v for k, v in self.named_parameters() if v.requires_grad}

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.grad = None


def param(data) -> Tensor:
    return Tensor(data, requires_grad=True)


class Linear(Module):
    """``y = x W^T + b`` with an optional low-rank adapter ``(scaling / r) B A``."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = param(rng.normal(0.0, d_in**-0.5, size=(d_out, d_in)))
        self.bias = param(np.zeros(d_out)) if bias else None
        self.rank = 0
        self.lora_scaling = 0.0
        self.lora_A: Tensor | None = None
        self.lora_B: Tensor | None = None

    @property
    def d_in(self) -> int:
        return self.weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.weight.shape[0]

    def enable_lora(self, rank: int, scaling: float, rng: np.random.Generator) -> None:
        if rank <= 0:
            raise ValueError(f"adapter rank must be positive, got {rank}")
        if rank > min(self.d_in, self.d_out):
            raise ValueError(f"adapter rank {rank} exceeds layer width {min(self.d_in, self.d_out)}")
        self.rank = rank
        self.lora_scaling = float(scaling)
        self.lora_A = param(rng.normal(0.0, self.d_in**-0.5, size=(rank, self.d_in)))
        self.lora_B = param(np.zeros((self.d_out, rank)))
        self.weight.requires_grad = False
        if self.bias is not None:
            self.bias.requires_grad = False

    def effective_weight(self) -> np.ndarray:
        if not self.rank:
            return self.weight.data
        return self.weight.data + (self.lora_scaling / self.rank) * (self.lora_B.data @ self.lora_A.data)

    def __call__(self, x) -> Tensor:
        y = T.affine(x, self.weight, self.bias)
        if self.rank:
            delta = T.affine(T.affine(x, self.lora_A), self.lora_B)
            y = y + delta * (self.lora_scaling / self.rank)
        return y


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-5):
        self.gamma = param(np.ones(d))
        self.beta = param(np.zeros(d))
        self.eps = eps

    def __call__(self, x) -> Tensor:
        return T.layer_norm(x, self.gamma, self.beta, self.eps)


class FeedForward(Module):
    def __init__(self, d: int, hidden: int, rng: np.random.Generator, activation: str = "gelu"):
        if activation not in ("gelu", "relu"):
            raise ValueError(f"unknown activation {activation!r}")
        self.fc1 = Linear(d, hidden, rng)
        self.fc2 = Linear(hidden, d, rng)
        self.activation = activation

    def __call__(self, x) -> Tensor:
        act = T.gelu if self.activation == "gelu" else T.relu
        return self.fc2(act(self.fc1(x)))


def split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, L, d = x.shape
    return T.swapaxes(x.reshape(*lead, L, heads, d // heads), -2, -3)


def merge_heads(x: Tensor) -> Tensor:
    *lead, h, L, dk = x.shape
    return T.swapaxes(x, -2, -3).reshape(*lead, L, h * dk)


def causal_bias(L: int) -> np.ndarray:
    upper = np.triu(np.ones((L, L), dtype=bool), k=1)
    return np.where(upper, CAUSAL_FILL, 0.0)


class MultiHeadAttention(Module):
    """Scaled dot-product attention with separate query and key/value inputs."""

    def __init__(self, d_q: int, d_kv: int, d_model: int, heads: int, rng: np.random.Generator):
        if d_model % heads:
            raise ValueError(f"model width {d_model} not divisible by {heads} heads")
        self.heads = heads
        self.q_proj = Linear(d_q, d_model, rng)
        self.k_proj = Linear(d_kv, d_model, rng)
        self.v_proj = Linear(d_kv, d_model, rng)
        self.out_proj = Linear(d_model, d_model, rng)

    def projections(self) -> list[Linear]:
        return [self.q_proj, self.k_proj, self.v_proj, self.out_proj]

    def attend(self, q_in, kv_in, bias=None, causal: bool = False) -> tuple[Tensor, Tensor]:
        """Return (merged context before the output projection, attention probabilities).

        ``bias`` is added to the pre-softmax scores and must broadcast to
        ``(..., heads, Lq, Lk)``.
        """
        q = split_heads(self.q_proj(q_in), self.heads)
        k = split_heads(self.k_proj(kv_in), self.heads)
        v = split_heads(self.v_proj(kv_in), self.heads)
        dk = q.shape[-1]
        scores = T.matmul(q, k.T) * (1.0 / np.sqrt(dk))
        if bias is not None:
            scores = scores + bias
        if causal:
            scores = scores + causal_bias(scores.shape[-1])
        probs = T.softmax(scores, axis=-1)
        return merge_heads(T.matmul(probs, v)), probs

    def __call__(self, q_in, kv_in, bias=None, causal: bool = False) -> Tensor:
        ctx, _ = self.attend(q_in, kv_in, bias=bias, causal=causal)
        return self.out_proj(ctx)
