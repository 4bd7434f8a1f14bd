"""Toy autoregressive transformer decoder conditioned on a prompt prefix."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import numerics as N
from .numerics import FeedForward, LayerNorm, Linear, Module, MultiHeadAttention, Tensor


@dataclass
class DecoderConfig:
    vocab_size: int
    d_w: int = 64
    layers: int = 2
    heads: int = 4
    ffn_hidden: int = 128
    max_len: int = 256
    lora_rank: int = 4
    lora_scaling: float = 8.0
    activation: str = "gelu"

    def __post_init__(self):
        if self.d_w % self.heads:
            raise ValueError(f"d_w={self.d_w} must be divisible by heads={self.heads}")
        if self.lora_rank < 0:
            raise ValueError("lora_rank must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


class Block(Module):
    def __init__(self, cfg: DecoderConfig, rng: np.random.Generator):
        self.ln1 = LayerNorm(cfg.d_w)
        self.attn = MultiHeadAttention(cfg.d_w, cfg.d_w, cfg.d_w, cfg.heads, rng)
        self.ln2 = LayerNorm(cfg.d_w)
        self.ffn = FeedForward(cfg.d_w, cfg.ffn_hidden, rng, cfg.activation)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h, causal=True)
        return x + self.ffn(self.ln2(x))


class Decoder(Module):
    """Pre-norm causal transformer with learned absolute positions.

    ``tok_emb`` is the single text-embedding table: it also supplies entity
    name features and status-word embeddings.
    """

    def __init__(self, cfg: DecoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.tok_emb = N.Tensor(rng.normal(0.0, 0.5, size=(cfg.vocab_size, cfg.d_w)), requires_grad=True)
        self.pos_emb = N.Tensor(rng.normal(0.0, 0.1, size=(cfg.max_len, cfg.d_w)), requires_grad=True)
        self.layers = [Block(cfg, rng) for _ in range(cfg.layers)]
        self.ln_f = LayerNorm(cfg.d_w)
        self.lm_head = Linear(cfg.d_w, cfg.vocab_size, rng)
        if cfg.lora_rank:
            apply_low_rank_adapters(self, cfg.lora_rank, cfg.lora_scaling, rng)

    def attention_projections(self) -> list[Linear]:
        return [lin for block in self.layers for lin in block.attn.projections()]

    def hidden(self, x: Tensor) -> Tensor:
        L = x.shape[-2]
        if L > self.cfg.max_len:
            raise ValueError(f"sequence length {L} exceeds max_len {self.cfg.max_len}")
        x = x + self.pos_emb[:L]
        for block in self.layers:
            x = block(x)
        return self.ln_f(x)

    def forward(self, prompt_emb, target) -> Tensor:
        """Logits (..., M, V) for each target token given the prompt and the preceding targets.

        ``prompt_emb`` is (..., Lp, d_w); ``target`` is integer (..., M). The
        last prompt position predicts the first target token.
        """
        prompt_emb = N.as_tensor(prompt_emb)
        target = np.asarray(target, dtype=np.int64)
        M = target.shape[-1]
        Lp = prompt_emb.shape[-2]
        if Lp + M > self.cfg.max_len:
            raise ValueError(f"prompt ({Lp}) + target ({M}) exceeds max_len {self.cfg.max_len}")
        if M == 0:
            return N.Tensor(np.zeros((*target.shape, self.cfg.vocab_size)))
        x = prompt_emb
        if M > 1:
            x = N.concat([prompt_emb, N.embedding(self.tok_emb, target[..., :-1])], axis=-2)
        h = self.hidden(x)
        return self.lm_head(h[..., Lp - 1:, :])

    __call__ = forward

    def next_token_logits(self, prompt_emb, prefix) -> Tensor:
        prompt_emb = N.as_tensor(prompt_emb)
        prefix = np.asarray(prefix, dtype=np.int64)
        x = prompt_emb
        if prefix.shape[-1]:
            x = N.concat([prompt_emb, N.embedding(self.tok_emb, prefix)], axis=-2)
        return self.lm_head(self.hidden(x)[..., -1, :])


def apply_low_rank_adapters(decoder: Decoder, rank: int, scaling: float, rng: np.random.Generator) -> Decoder:
    """Attach (A, B) adapters to every attention projection and freeze the base projections."""
    if rank <= 0:
        raise ValueError("adapter rank must be positive")
    for lin in decoder.attention_projections():
        lin.enable_lora(rank, scaling, rng)
    return decoder


def generation_loss(logits, target, mask=None) -> Tensor:
    """Mean token-level cross-entropy over unmasked target positions."""
    logits = N.as_tensor(logits)
    target = np.asarray(target, dtype=np.int64)
    if logits.shape[:-1] != target.shape:
        raise N.ShapeError(f"generation_loss: logits {logits.shape} vs target {target.shape}")
    return N.cross_entropy(logits, target, mask)


def joint_loss(L_g, L_d, lam: float):
    return L_g + L_d * lam


def _sample(logits: np.ndarray, temperature: float, rng: np.random.Generator) -> np.ndarray:
    z = logits / temperature
    z = z - z.max(axis=-1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=-1, keepdims=True)
    u = rng.random(p.shape[:-1])
    return np.minimum((p.cumsum(axis=-1) < u[..., None]).sum(axis=-1), p.shape[-1] - 1)


def generate(decoder: Decoder, prompt_emb, max_len: int, eos_id: int, mode: str = "greedy",
             temperature: float = 1.0, rng: np.random.Generator | None = None) -> list[list[int]]:
    """Autoregressive decoding for a batch (or a single prompt).

    Each output stops after the first end token or ``max_len`` tokens. With
    ``mode="sampled"`` a temperature of 0 falls back to greedy argmax.
    """
    prompt_emb = N.as_tensor(prompt_emb)
    single = prompt_emb.ndim == 2
    if single:
        prompt_emb = prompt_emb.reshape(1, *prompt_emb.shape)
    if mode not in ("greedy", "sampled"):
        raise ValueError(f"unknown decoding mode {mode!r}")
    if mode == "sampled" and temperature > 0 and rng is None:
        raise ValueError("sampled decoding needs an explicit rng")
    B = prompt_emb.shape[0]
    max_len = min(max_len, decoder.cfg.max_len - prompt_emb.shape[-2])
    seqs = np.zeros((B, 0), dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    with N.no_grad():
        for _ in range(max_len):
            logits = decoder.next_token_logits(prompt_emb, seqs).data
            if mode == "greedy" or temperature <= 0:
                nxt = logits.argmax(axis=-1)
            else:
                nxt = _sample(logits, temperature, rng)
            nxt = np.where(done, eos_id, nxt)
            seqs = np.concatenate([seqs, nxt[:, None]], axis=1)
            done |= nxt == eos_id
            if done.all():
                break
    out = []
    for row in seqs:
        ids = row.tolist()
        if eos_id in ids:
            ids = ids[: ids.index(eos_id) + 1]
        out.append(ids)
    return out[0] if single else out
