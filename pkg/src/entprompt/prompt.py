"""Visual adaptor and multi-modal prompt assembly.

Layout, in order::

    [Img] scan_1 .. scan_N [/Img]
    for each entity i: <name_i> <entity_embed_i> [<category_i>] [status: <status_i>]
    [MRG] <instruction tokens>

The entity block is present when entity embeddings or category words are
enabled; status positions require entity embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import numerics as N
from .numerics import Linear, Module, Tensor
from .text import IMG_CLOSE, IMG_OPEN, MRG, STATUS_PREFIX, Vocabulary

SEGMENT_KINDS = ("scan", "entity_embed", "status_embed", "category_embed", "instruction_token", "special_token")


class PromptError(ValueError):
    pass


class AdaptorParams(Module):
    def __init__(self, P: int, d_s: int, d_w: int, rng: np.random.Generator):
        self.P, self.d_s = P, d_s
        self.fc1 = Linear(P * d_s, d_s, rng)
        self.fc2 = Linear(d_s, d_w, rng)


def adapt_scans(V_f, params: AdaptorParams) -> Tensor:
    """(..., N, P, d_s) -> (..., N, d_w): flatten each scan's patches, then two affines."""
    V_f = N.as_tensor(V_f)
    if V_f.ndim < 3 or V_f.shape[-2:] != (params.P, params.d_s):
        raise N.ShapeError(f"adapt_scans: expected (..., N, {params.P}, {params.d_s}), got {V_f.shape}")
    flat = V_f.reshape(*V_f.shape[:-2], params.P * params.d_s)
    return params.fc2(params.fc1(flat))


@dataclass(frozen=True)
class PromptToggles:
    entity_embed: bool = True
    status_embed: bool = True
    category_words: bool = False

    def __post_init__(self):
        if self.status_embed and not self.entity_embed:
            raise PromptError("status embeddings require entity embeddings")


@dataclass(frozen=True)
class Slot:
    kind: str
    entity_index: int | None
    source: tuple  # ("vocab", token_id) | ("scan", n) | ("entity", i) | ("status", i) | ("category", i)


def prompt_layout(n_scans: int, vocab: Vocabulary, entity_names: Sequence[str], instruction: str,
                  toggles: PromptToggles) -> list[Slot]:
    """Slot sequence for ``n_scans`` scans and the named entities (global entity excluded)."""

    def tok(kind, word, entity=None):
        try:
            return Slot(kind, entity, ("vocab", vocab.id(word)))
        except KeyError:
            raise PromptError(f"token {word!r} is not in the vocabulary") from None

    slots = [tok("special_token", IMG_OPEN)]
    slots += [Slot("scan", None, ("scan", n)) for n in range(n_scans)]
    slots.append(tok("special_token", IMG_CLOSE))
    if toggles.entity_embed or toggles.category_words:
        for i, name in enumerate(entity_names, start=1):
            slots.append(tok("instruction_token", name, i))
            if toggles.entity_embed:
                slots.append(Slot("entity_embed", i, ("entity", i)))
            if toggles.category_words:
                slots.append(Slot("category_embed", i, ("category", i)))
            if toggles.status_embed:
                slots.append(tok("instruction_token", STATUS_PREFIX, i))
                slots.append(Slot("status_embed", i, ("status", i)))
    slots.append(tok("special_token", MRG))
    slots += [tok("instruction_token", w) for w in instruction.split()]
    return slots


@dataclass
class MultiModalPrompt:
    embeddings: Tensor
    slots: list[Slot] = field(default_factory=list)

    @property
    def segments(self) -> list[str]:
        return [s.kind for s in self.slots]

    @property
    def entity_index(self) -> list[int | None]:
        return [s.entity_index for s in self.slots]

    def __len__(self) -> int:
        return len(self.slots)

    def dump(self) -> str:
        """One line per position: index, segment kind, entity index, source id."""
        lines = []
        for pos, s in enumerate(self.slots):
            ent = "-" if s.entity_index is None else str(s.entity_index)
            lines.append(f"{pos}\t{s.kind}\t{ent}\t{s.source[0]}:{s.source[1]}")
        return "\n".join(lines) + "\n"


def assemble(V_e, E_e, S_e, table, vocab: Vocabulary, entity_names: Sequence[str], instruction: str,
             toggles: PromptToggles, C_e=None) -> MultiModalPrompt:
    """Interleave scan, entity, status and category embeddings with vocabulary rows.

    ``V_e`` is (..., N, d_w); ``E_e``, ``S_e``, ``C_e`` are (..., k, d_w) or
    (k, d_w) and broadcast over leading axes. Unused sources may be None.
    ``table`` is the decoder token-embedding Tensor.
    """
    V_e = N.as_tensor(V_e)
    lead, d = V_e.shape[:-2], V_e.shape[-1]
    k = len(entity_names)
    slots = prompt_layout(V_e.shape[-2], vocab, entity_names, instruction, toggles)

    needed = {"entity": toggles.entity_embed, "status": toggles.status_embed, "category": toggles.category_words}
    sources = {"entity": E_e, "status": S_e, "category": C_e}
    vocab_ids = sorted({s.source[1] for s in slots if s.source[0] == "vocab"})
    pieces = [N.embedding(table, vocab_ids), V_e]
    offsets = {"vocab": 0, "scan": len(vocab_ids)}
    cursor = len(vocab_ids) + V_e.shape[-2]
    for name in ("entity", "status", "category"):
        if not needed[name]:
            continue
        src = sources[name]
        if src is None:
            raise PromptError(f"{name} embeddings are enabled but were not supplied")
        src = N.as_tensor(src)
        if src.shape[-2:] != (k, d):
            raise N.ShapeError(f"assemble: {name} embeddings {src.shape} do not match (k={k}, d_w={d})")
        pieces.append(src)
        offsets[name] = cursor - 1  # entity indices are 1-based
        cursor += k
    if pieces[0].shape[-1] != d:
        raise N.ShapeError(f"assemble: table width {pieces[0].shape[-1]} != scan embedding width {d}")

    pieces = [p if p.shape[:-2] == lead else N.broadcast_to(p, (*lead, *p.shape[-2:])) for p in pieces]
    pool = N.concat(pieces, axis=-2)
    vocab_pos = {tid: n for n, tid in enumerate(vocab_ids)}
    index = np.array([
        vocab_pos[s.source[1]] if s.source[0] == "vocab" else offsets[s.source[0]] + s.source[1]
        for s in slots
    ])
    return MultiModalPrompt(pool[..., index, :], slots)


def category_words(E_p, threshold: float = 0.5) -> list[str]:
    """'exist' when the presence probability reaches the threshold (inclusive), else 'not exist'."""
    p = np.asarray(getattr(E_p, "data", E_p), dtype=float)
    return ["exist" if v >= threshold else "not exist" for v in p.reshape(-1)]
