"""End-to-end model: scans and entity prompts in, report tokens out.

One training step runs joint attention, classifies entities, turns the
batch's detached per-entity loss into status words, assembles the prompt
and optimises ``L_g + lam * L_d``. Inference swaps the per-sample
ground-truth graph for the training co-occurrence graph and the live status
for its moving average, and never reads a sample's report, labels or pairs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import zipfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import numerics as N
from .config import ConfigError, RunConfig, load_config
from .data import SyntheticSample, cooccurrence_stats, default_entities, default_graph, lexicon
from .decoder import Decoder, DecoderConfig, generate, generation_loss, joint_loss
from .graph import EntityVocabulary, ExplicitGraph, build_M_E_infer, build_M_E_train
from .kja import KJAParams, kja_forward
from .metrics import evaluate
from .numerics import Module, Tensor
from .numerics.rng import derive_seed, make_rng, rng_state_dumps
from .prompt import AdaptorParams, MultiModalPrompt, adapt_scans, assemble, category_words
from .status import (EntityClassifier, bucket, classification_loss, classify, embed_status, embed_words,
                     per_entity_loss, saturate, update_ema)
from .text import EOS, PAD, Vocabulary, build_vocabulary

CHECKPOINT = "checkpoint.ckpt"

# Ablation arms as config overrides: prompt components crossed with mask
# sources, plus the category-word variants.
ARMS: dict[str, dict[str, bool]] = {
    "baseline": dict(entity_embed=False, status_embed=False, category_words=False, use_M_E=False, use_M_I=False),
    "a": dict(entity_embed=True, status_embed=False, category_words=False, use_M_E=True, use_M_I=False),
    "b": dict(entity_embed=True, status_embed=False, category_words=False, use_M_E=False, use_M_I=True),
    "c": dict(entity_embed=True, status_embed=False, category_words=False, use_M_E=True, use_M_I=True),
    "d": dict(entity_embed=True, status_embed=True, category_words=False, use_M_E=True, use_M_I=False),
    "e": dict(entity_embed=True, status_embed=True, category_words=False, use_M_E=False, use_M_I=True),
    "full": dict(entity_embed=True, status_embed=True, category_words=False, use_M_E=True, use_M_I=True),
    "embed+category": dict(entity_embed=True, status_embed=False, category_words=True, use_M_E=True, use_M_I=True),
    "embed+status+category": dict(entity_embed=True, status_embed=True, category_words=True, use_M_E=True,
                                  use_M_I=True),
}


class DivergenceError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


# --- model ----------------------------------------------------------------
class EntityPromptModel(Module):
    def __init__(self, cfg: RunConfig, seed: int | None = None):
        self.cfg = cfg
        self.entities: EntityVocabulary = default_entities(cfg.k)
        self.vocab: Vocabulary = build_vocabulary(self.entities.names, cfg.instruction)
        rng = make_rng(derive_seed(cfg.seed if seed is None else seed, "init"))
        self.decoder = Decoder(self.decoder_config(), rng)
        self.adaptor = AdaptorParams(cfg.patches, cfg.d_s, cfg.d_w, rng)
        self.kja = KJAParams(cfg.d_w, cfg.d_s, cfg.d_h, rng, heads=cfg.kja_heads, d_r=cfg.d_r,
                             ffn_hidden=cfg.kja_ffn_hidden, depth=cfg.kja_depth, activation=cfg.activation)
        self.classifier = EntityClassifier(cfg.k, cfg.d_h, cfg.d_c, rng)
        self.entity_ids = np.array(self.vocab.encode(self.entities.names))

    def decoder_config(self) -> DecoderConfig:
        c = self.cfg
        return DecoderConfig(len(self.vocab), c.d_w, c.layers, c.heads, c.ffn_hidden, c.max_len,
                             c.lora_rank, c.lora_scaling, c.activation)

    @property
    def names(self) -> list[str]:
        return list(self.entities.names[1:])


def predicted_trainable_count(cfg: RunConfig) -> int:
    """Trainable parameter count from the configuration alone (no model is built)."""
    V = len(build_vocabulary(default_entities(cfg.k).names, cfg.instruction))
    d, f, L, r = cfg.d_w, cfg.ffn_hidden, cfg.layers, cfg.lora_rank

    def linear(i, o):
        return i * o + o

    def ffn(width, hidden):
        return linear(width, hidden) + linear(hidden, width)

    attn = 4 * 2 * r * d if r else 4 * linear(d, d)
    decoder = V * d + cfg.max_len * d + L * (attn + 4 * d + ffn(d, f)) + 2 * d + linear(d, V)
    adaptor = linear(cfg.patches * cfg.d_s, cfg.d_s) + linear(cfg.d_s, d)
    h, d_r = cfg.d_h, cfg.d_r or cfg.d_h
    kja = (linear(d, h) + 2 * linear(cfg.d_s, h) + linear(h, h) + ffn(h, cfg.kja_ffn_hidden)
           + linear(h, d_r) + 2 + cfg.kja_depth * (4 * linear(h, h) + 4 * h + ffn(h, cfg.kja_ffn_hidden))
           + linear(h, d))
    classifier = linear(h, cfg.d_c) + cfg.k * cfg.d_c + cfg.k
    return decoder + adaptor + kja + classifier


def count_trainable(model: Module) -> int:
    return sum(p.size for p in model.trainable_parameters().values())


# --- batches --------------------------------------------------------------
@dataclass
class TrainBatch:
    ids: list[str]
    V_f: np.ndarray
    labels: np.ndarray
    M_E: np.ndarray
    targets: np.ndarray
    mask: np.ndarray


def encode_targets(reports: Sequence[Sequence[str]], vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    M = max(len(r) for r in reports)
    targets = np.full((len(reports), M), vocab.pad_id, dtype=np.int64)
    mask = np.zeros((len(reports), M))
    for i, rep in enumerate(reports):
        targets[i, :len(rep)] = vocab.encode(rep)
        mask[i, :len(rep)] = 1.0
    return targets, mask


def make_train_batch(samples: Sequence[SyntheticSample], model: EntityPromptModel, graph: ExplicitGraph) -> TrainBatch:
    """Training-mode batch: ground-truth pairs feed each sample's explicit graph."""
    ents = model.entities
    targets, mask = encode_targets([s.report for s in samples], model.vocab)
    return TrainBatch(
        ids=[s.id for s in samples],
        V_f=np.stack([s.V_f for s in samples]),
        labels=np.stack([s.labels for s in samples]).astype(float),
        M_E=np.stack([build_M_E_train(ents, graph, s.gt_pairs) for s in samples]),
        targets=targets, mask=mask)


# --- forward pieces -------------------------------------------------------
@dataclass
class EntityPass:
    kja: object
    E_p: Tensor


def entity_pass(model: EntityPromptModel, V_f: np.ndarray, M_E: np.ndarray) -> EntityPass:
    cfg = model.cfg
    b = V_f.shape[0]
    T_f = N.embedding(model.decoder.tok_emb, model.entity_ids)
    T_f = N.broadcast_to(T_f, (b, *T_f.shape))
    M_E = np.broadcast_to(M_E, (b, *M_E.shape[-2:]))
    out = kja_forward(T_f, V_f, M_E, model.kja, cfg.alpha_E, cfg.alpha_I, cfg.use_M_E, cfg.use_M_I)
    return EntityPass(out, classify(out.E_f, model.classifier))


def status_embeddings(model: EntityPromptModel, scores: np.ndarray) -> tuple[list[str], np.ndarray]:
    words = bucket(scores)
    return words, embed_status(words, model.decoder.tok_emb.data, model.vocab.word_ids)


def category_embeddings(model: EntityPromptModel, E_p: np.ndarray) -> np.ndarray:
    table = model.decoder.tok_emb.data
    return np.stack([embed_words(category_words(row), table, model.vocab.word_ids) for row in E_p])


def build_prompt(model: EntityPromptModel, V_f, ent: EntityPass | None, S_e, C_e) -> MultiModalPrompt:
    cfg = model.cfg
    V_e = adapt_scans(V_f, model.adaptor)
    E_e = ent.kja.E_e if (ent is not None and cfg.entity_embed) else None
    return assemble(V_e, E_e, S_e if cfg.status_embed else None, model.decoder.tok_emb, model.vocab,
                    model.names, cfg.instruction, cfg.toggles, C_e=C_e if cfg.category_words else None)


# --- training state -------------------------------------------------------
@dataclass
class TrainState:
    ema: np.ndarray
    ema_updates: int = 0
    cooccurrence: np.ndarray | None = None
    total_samples: int = 0
    step: int = 0
    epoch: int = 0
    best_val: float = math.inf
    best_epoch: int = -1

    def update_status(self, E_s: np.ndarray, decay: float) -> None:
        # the first update adopts the scores outright instead of averaging with the zero init
        self.ema = update_ema(E_s, self.ema, 0.0 if self.ema_updates == 0 else decay)
        self.ema_updates += 1


def inference_graph(model: EntityPromptModel, state: TrainState) -> np.ndarray:
    g = default_graph(model.entities, model.cfg.tau).with_statistics(state.cooccurrence, state.total_samples)
    return build_M_E_infer(model.entities, g)


@dataclass
class StepLog:
    step: int
    epoch: int
    L: float
    L_g: float
    L_d: float | None
    e_s: np.ndarray | None
    E_s: np.ndarray | None
    words: list[str] | None


def train_step(model: EntityPromptModel, opt: N.AdamW, batch: TrainBatch, state: TrainState) -> StepLog:
    cfg = model.cfg
    state.step += 1
    opt.zero_grad()
    ent = S_e = C_e = None
    L_d = e_s = E_s = words = None
    try:
        if cfg.uses_entities:
            ent = entity_pass(model, batch.V_f, batch.M_E)
            L_d = classification_loss(ent.E_p, batch.labels)
            e_s = per_entity_loss(ent.E_p, batch.labels)
            E_s = saturate(e_s)
            state.update_status(E_s, cfg.ema_decay)
            words, S_e = status_embeddings(model, E_s)
            if cfg.category_words:
                C_e = category_embeddings(model, ent.E_p.data)
        prompt = build_prompt(model, batch.V_f, ent, S_e, C_e)
        logits = model.decoder(prompt.embeddings, batch.targets)
        L_g = generation_loss(logits, batch.targets, batch.mask)
        L = joint_loss(L_g, L_d, cfg.lam) if L_d is not None else L_g
        if not np.isfinite(L.item()):
            raise DivergenceError(f"non-finite loss {L.item()} at step {state.step}")
        N.backward(L)
    except N.NumericFault as exc:
        raise DivergenceError(f"non-finite values at step {state.step} ({exc})") from None
    opt.step()
    return StepLog(state.step, state.epoch, L.item(), L_g.item(), None if L_d is None else L_d.item(), e_s, E_s, words)


# --- inference ------------------------------------------------------------
def _features(samples) -> tuple[list[str], np.ndarray]:
    """Only ``id`` and ``V_f`` are read here; reports, labels and pairs stay untouched."""
    return [s.id for s in samples], np.stack([s.V_f for s in samples])


@dataclass
class InferenceView:
    ids: list[str]
    M_E: np.ndarray
    M_I: np.ndarray | None
    M_adj: np.ndarray | None
    E_p: np.ndarray | None
    status_words: list[str]
    prompt: MultiModalPrompt


def inference_prompt(model: EntityPromptModel, state: TrainState, V_f: np.ndarray) -> InferenceView:
    """Prompt for unseen scans: statistical graph plus moving-average status."""
    cfg = model.cfg
    M_E = inference_graph(model, state)
    ent = S_e = C_e = None
    words, S_e = status_embeddings(model, np.clip(state.ema, 0.0, 1.0))
    if cfg.uses_entities:
        ent = entity_pass(model, V_f, M_E)
        if cfg.category_words:
            C_e = category_embeddings(model, ent.E_p.data)
    prompt = build_prompt(model, V_f, ent, S_e, C_e)
    return InferenceView([], M_E,
                         None if ent is None or ent.kja.M_I is None else ent.kja.M_I.data,
                         None if ent is None else ent.kja.M_adj.data,
                         None if ent is None else ent.E_p.data, words, prompt)


def generate_reports(model: EntityPromptModel, state: TrainState, samples, batch_size: int = 32,
                     mode: str = "greedy", temperature: float = 1.0, seed: int = 0) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    rng = make_rng(derive_seed(seed, "sample")) if mode == "sampled" else None
    with N.no_grad():
        for start in range(0, len(samples), batch_size):
            ids, V_f = _features(samples[start:start + batch_size])
            view = inference_prompt(model, state, V_f)
            seqs = generate(model.decoder, view.prompt.embeddings, model.cfg.max_gen_len, model.vocab.eos_id,
                            mode=mode, temperature=temperature, rng=rng)
            out.update(zip(ids, seqs))
    return out


def validation_loss(model: EntityPromptModel, state: TrainState, samples, batch_size: int = 32) -> float:
    """Token-weighted generation loss under inference conditions."""
    total = tokens = 0.0
    with N.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start:start + batch_size]
            _, V_f = _features(chunk)
            view = inference_prompt(model, state, V_f)
            targets, mask = encode_targets([s.report for s in chunk], model.vocab)
            L_g = generation_loss(model.decoder(view.prompt.embeddings, targets), targets, mask).item()
            total += L_g * mask.sum()
            tokens += mask.sum()
    return total / tokens


def strip_report(tokens: Sequence[str]) -> list[str]:
    out = []
    for t in tokens:
        if t == EOS:
            break
        if t != PAD:
            out.append(t)
    return out


def token_accuracy(pred: Sequence[int], ref: Sequence[int]) -> float:
    """Position-wise agreement over the longer of the two sequences."""
    n = max(len(pred), len(ref))
    return sum(a == b for a, b in zip(pred, ref)) / n if n else 1.0


# --- checkpoints ----------------------------------------------------------
def save_checkpoint(path, model: EntityPromptModel, opt: N.AdamW | None, state: TrainState, rng_state: str = "") -> None:
    arrays = {f"param/{k}": v.data for k, v in model.named_parameters()}
    if opt is not None:
        arrays.update({f"adam/{k}": v for k, v in opt.state_arrays().items()})
    arrays["status/ema"] = state.ema
    arrays["status/ema_updates"] = np.array([state.ema_updates])
    arrays["graph/cooccurrence"] = state.cooccurrence
    arrays["graph/total_samples"] = np.array([state.total_samples])
    arrays["meta/progress"] = np.array([state.step, state.epoch, state.best_epoch])
    arrays["meta/best_val"] = np.array([state.best_val])
    texts = {"config.ini": model.cfg.to_ini(), "vocab.txt": "\n".join(model.vocab.tokens) + "\n",
             "decoder.json": json.dumps(model.decoder_config().to_dict(), sort_keys=True),
             "rng.json": rng_state}
    N.save_archive(path, arrays, texts)


def config_from_text(text: str) -> RunConfig:
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "config.ini"
        p.write_text(text, encoding="utf-8")
        return load_config(p)


def load_checkpoint(path) -> tuple[EntityPromptModel, TrainState, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        arrays, texts = N.load_archive(path)
        cfg = config_from_text(texts["config.ini"])
    except (KeyError, ValueError, OSError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from None
    model = EntityPromptModel(cfg)
    if texts.get("vocab.txt", "").splitlines() != model.vocab.tokens:
        raise CheckpointError(f"{path}: vocabulary does not match its configuration")
    params = model.parameters()
    stored = {k[len("param/"):] for k in arrays if k.startswith("param/")}
    if stored != set(params):
        raise CheckpointError(f"{path}: parameter set differs from configuration "
                              f"(missing {sorted(set(params) - stored)[:3]}, extra {sorted(stored - set(params))[:3]})")
    for name, p in params.items():
        arr = arrays[f"param/{name}"]
        if arr.shape != p.shape:
            raise CheckpointError(f"{path}: {name} has shape {arr.shape}, configuration expects {p.shape}")
        p.data = np.array(arr, dtype=np.float64)
    step, epoch, best_epoch = (int(x) for x in arrays["meta/progress"])
    state = TrainState(np.array(arrays["status/ema"]), int(arrays["status/ema_updates"][0]),
                       np.array(arrays["graph/cooccurrence"]), int(arrays["graph/total_samples"][0]),
                       step, epoch, float(arrays["meta/best_val"][0]), best_epoch)
    adam = {k[len("adam/"):]: v for k, v in arrays.items() if k.startswith("adam/")}
    return model, state, adam


def check_data_compatible(model: EntityPromptModel, samples: Sequence[SyntheticSample]) -> None:
    cfg = model.cfg
    if not samples:
        return
    shape = samples[0].V_f.shape
    if shape[1:] != (cfg.patches, cfg.d_s):
        raise CheckpointError(f"data scans are {shape}, checkpoint expects (N, {cfg.patches}, {cfg.d_s})")
    if samples[0].labels.size != cfg.k:
        raise CheckpointError(f"data has {samples[0].labels.size} entities, checkpoint expects k={cfg.k}")
    if shape[0] + 2 + 4 * cfg.k + 1 + len(cfg.instruction.split()) >= cfg.max_len:
        raise CheckpointError(f"{shape[0]} scans do not fit the decoder context of {cfg.max_len}")


# --- training loop --------------------------------------------------------
@dataclass
class TrainResult:
    state: TrainState
    log: list[StepLog] = field(default_factory=list)
    val_history: list[float] = field(default_factory=list)
    checkpoint: Path | None = None


def _sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def train(cfg: RunConfig, train_samples: Sequence[SyntheticSample], val_samples: Sequence[SyntheticSample],
          out_dir, progress=None) -> TrainResult:
    """Train, keeping the checkpoint with the best validation generation loss.

    Writes ``checkpoint.ckpt``, ``train_log.csv`` and ``status_log.csv``
    under ``out_dir``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = EntityPromptModel(cfg)
    check_data_compatible(model, train_samples)
    graph = default_graph(model.entities, cfg.tau)
    counts, total = cooccurrence_stats(train_samples, model.entities)
    state = TrainState(np.zeros(cfg.k), cooccurrence=counts, total_samples=total)
    opt = N.AdamW(model.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), weight_decay=cfg.weight_decay)
    result = TrainResult(state)
    names = model.names
    with open(out / "train_log.csv", "w", newline="", encoding="utf-8") as tlog, \
            open(out / "status_log.csv", "w", newline="", encoding="utf-8") as slog:
        tw = csv.writer(tlog, lineterminator="\n")
        sw = csv.writer(slog, lineterminator="\n")
        tw.writerow(["step", "epoch", "L", "L_g", "L_d"] + [f"E_s[{n}]" for n in names])
        sw.writerow(["epoch", "entity", "mean_e_s", "mean_E_s", "status_word"])
        order = np.arange(len(train_samples))
        for epoch in range(cfg.epochs):
            state.epoch = epoch
            shuffle_rng = make_rng(derive_seed(cfg.seed, "shuffle", epoch))
            if cfg.shuffle:
                order = shuffle_rng.permutation(len(train_samples))
            epoch_logs = []
            for start in range(0, len(order), cfg.batch_size):
                chunk = [train_samples[i] for i in order[start:start + cfg.batch_size]]
                rec = train_step(model, opt, make_train_batch(chunk, model, graph), state)
                epoch_logs.append(rec)
                tw.writerow([rec.step, epoch, repr(rec.L), repr(rec.L_g), "" if rec.L_d is None else repr(rec.L_d)]
                            + ([repr(float(x)) for x in rec.E_s] if rec.E_s is not None else [""] * len(names)))
            result.log += epoch_logs
            with_status = [r for r in epoch_logs if r.e_s is not None]
            if with_status:
                e_s = np.mean([r.e_s for r in with_status], axis=0)
                E_s = np.mean([r.E_s for r in with_status], axis=0)
                for i, name in enumerate(names):
                    word = Counter(r.words[i] for r in with_status).most_common(1)[0][0]
                    sw.writerow([epoch, name, repr(float(e_s[i])), repr(float(E_s[i])), word])
            val = validation_loss(model, state, val_samples) if val_samples else epoch_logs[-1].L_g
            result.val_history.append(val)
            if val < state.best_val:
                state.best_val, state.best_epoch = val, epoch
                save_checkpoint(out / CHECKPOINT, model, opt, state, rng_state_dumps(shuffle_rng))
            if progress is not None:
                progress(epoch, epoch_logs[-1], val)
    result.checkpoint = out / CHECKPOINT
    return result


# --- evaluation -----------------------------------------------------------
@dataclass
class EvalResult:
    scores: dict[str, float]
    keyword: object
    generations: dict[str, list[int]]
    pairs: list[tuple[list[str], list[str]]]


def evaluate_model(model: EntityPromptModel, state: TrainState, samples: Sequence[SyntheticSample],
                   self_reference: bool = False) -> EvalResult:
    """Greedy generation over ``samples`` followed by the metric suite."""
    if not samples:
        raise ValueError("evaluation split is empty")
    if self_reference:
        gens = {s.id: model.vocab.encode(s.report) for s in samples}
    else:
        gens = generate_reports(model, state, samples)
    pairs = [(strip_report(model.vocab.decode(gens[s.id])), strip_report(s.report)) for s in samples]
    scores, kw = evaluate(pairs, lexicon(model.entities))
    return EvalResult(scores, kw, gens, pairs)


def write_generations(path, model: EntityPromptModel, gens: dict[str, list[int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, ids in gens.items():
            fh.write(f"{sid}\t{' '.join(map(str, ids))}\t{' '.join(model.vocab.decode(ids))}\n")


# --- inspection -----------------------------------------------------------
def inspect_sample(model: EntityPromptModel, state: TrainState, sample) -> InferenceView:
    _, V_f = _features([sample])
    with N.no_grad():
        view = inference_prompt(model, state, V_f)
    view.ids = [sample.id]
    return view


def write_matrix_csv(path, matrix: np.ndarray, names: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, matrix):
            w.writerow([name] + [repr(float(x)) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([[float(x) for x in row[1:]] for row in rows])


def write_inspection(out_dir, model: EntityPromptModel, state: TrainState, view: InferenceView) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(model.entities.names)
    written = ["M_E.csv"]
    write_matrix_csv(out / "M_E.csv", view.M_E, names)
    if view.M_I is not None:
        write_matrix_csv(out / "M_I.csv", view.M_I[0], names)
        written.append("M_I.csv")
    if view.M_adj is not None:
        write_matrix_csv(out / "M_adj.csv", np.broadcast_to(view.M_adj, (1, *view.M_adj.shape[-2:]))[0], names)
        written.append("M_adj.csv")
    with open(out / "status.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity", "E_p", "ema_score", "status_word"])
        for i, name in enumerate(model.names):
            conf = "" if view.E_p is None else repr(float(view.E_p[0, i]))
            w.writerow([name, conf, repr(float(state.ema[i])), view.status_words[i]])
    (out / "prompt.txt").write_text(view.prompt.dump(), encoding="utf-8")
    (out / "weights.txt").write_text(f"alpha_E = {model.cfg.alpha_E!r}\nalpha_I = {model.cfg.alpha_I!r}\n"
                                     f"use_M_E = {model.cfg.use_M_E}\nuse_M_I = {model.cfg.use_M_I}\n",
                                     encoding="utf-8")
    return written + ["status.csv", "prompt.txt", "weights.txt"]


__all__ = [
    "ARMS", "CHECKPOINT", "CheckpointError", "ConfigError", "DivergenceError", "EntityPromptModel", "TrainState",
    "count_trainable", "evaluate_model", "generate_reports", "inspect_sample", "load_checkpoint",
    "predicted_trainable_count", "save_checkpoint", "token_accuracy", "train", "train_step",
]
