"""Synthetic scan/report corpus.

Each entity owns a fixed rank-1 patch signature. A sample draws entity
labels from per-entity prevalences, stamps the signatures of present
entities into random scans and patches (a lesion shares the scan of the
region it is paired with), adds Gaussian noise, and writes a report that is
a deterministic function of the labels:

* present region:  ``abnormality in <region> .``
* absent region:   ``<region> normal .``
* present lesion:  ``<lesion> seen .``
* absent lesion:   nothing

Keyword phrases (``in <region>``, ``<lesion> seen``) therefore recover the
label vector exactly from any reference report.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import GLOBAL, EntityVocabulary, ExplicitGraph, dump_graph
from .numerics.rng import derive_seed, make_rng
from .text import EOS

REGION_NAMES = ("basal_ganglia", "thalamus", "ventricle", "sulcus", "cortex", "cerebellum",
                "brainstem", "frontal_lobe", "temporal_lobe", "parietal_lobe", "occipital_lobe", "pons")
LESION_NAMES = ("high_density", "low_density", "edema", "hematoma", "infarct", "atrophy",
                "calcification", "midline_shift", "hydrocephalus", "stagnant_blood", "lacune", "softening")
SPLITS = ("train", "test", "val")


class DatasetError(ValueError):
    pass


@dataclass
class CorpusConfig:
    n_total: int = 600
    split_ratio: tuple[int, int, int] = (7, 2, 1)  # train : test : val
    n_scans: int = 24
    patches: int = 4
    d_s: int = 32
    k: int = 8
    prevalence: tuple[float, ...] | None = None  # default: linear 0.9 -> 0.05
    snr: float = 2.0
    seed: int = 0

    def __post_init__(self):
        self.split_ratio = tuple(int(x) for x in self.split_ratio)
        if self.prevalence is not None:
            self.prevalence = tuple(float(x) for x in self.prevalence)
            if len(self.prevalence) != self.k:
                raise DatasetError(f"prevalence has {len(self.prevalence)} entries, expected k={self.k}")
            if any(not 0.0 < p < 1.0 for p in self.prevalence):
                raise DatasetError("prevalences must lie strictly between 0 and 1")
        if self.k < 1 or self.k > len(REGION_NAMES) + len(LESION_NAMES):
            raise DatasetError(f"k must be in 1..{len(REGION_NAMES) + len(LESION_NAMES)}")
        if self.snr <= 0:
            raise DatasetError("snr must be positive (use inf for noise-free features)")
        if sum(self.split_ratio) <= 0 or min(self.split_ratio) < 0:
            raise DatasetError("split ratio must be non-negative with a positive total")

    def prevalences(self) -> np.ndarray:
        if self.prevalence is not None:
            return np.asarray(self.prevalence)
        return np.linspace(0.9, 0.05, self.k) if self.k > 1 else np.array([0.5])

    def split_sizes(self) -> dict[str, int]:
        total = sum(self.split_ratio)
        test = self.n_total * self.split_ratio[1] // total
        val = self.n_total * self.split_ratio[2] // total
        return {"train": self.n_total - test - val, "test": test, "val": val}


@dataclass
class SyntheticSample:
    id: str
    V_f: np.ndarray
    labels: np.ndarray
    report: list[str]
    gt_pairs: list[tuple[int, int]] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, SyntheticSample):
            return NotImplemented
        return (self.id == other.id and self.report == other.report and self.gt_pairs == other.gt_pairs
                and np.array_equal(self.labels, other.labels) and self.V_f.shape == other.V_f.shape
                and self.V_f.tobytes() == other.V_f.tobytes())


# --- entities and grammar -------------------------------------------------
def default_entities(k: int) -> EntityVocabulary:
    """Alternate regions and lesions so both kinds span the prevalence range."""
    names, kinds, keywords = [GLOBAL], ["global"], [()]
    regions, lesions = list(REGION_NAMES), list(LESION_NAMES)
    for i in range(k):
        if (i % 2 == 0 and regions) or not lesions:
            name = regions.pop(0)
            names.append(name)
            kinds.append("region")
            keywords.append(("in", name))
        else:
            name = lesions.pop(0)
            names.append(name)
            kinds.append("lesion")
            keywords.append((name, "seen"))
    return EntityVocabulary(tuple(names), tuple(kinds), tuple(keywords))


def default_graph(vocab: EntityVocabulary, tau: float = 0.1) -> ExplicitGraph:
    """Expert priors: consecutive regions are neighbours, consecutive lesions are related."""
    regions, lesions = vocab.regions, vocab.lesions
    t2t = list(zip(regions, regions[1:]))
    l2l = list(zip(lesions, lesions[1:]))
    return ExplicitGraph(vocab, t2t, l2l, tau=tau)


def report_from_labels(labels: Sequence[int], vocab: EntityVocabulary) -> list[str]:
    tokens: list[str] = []
    for i, present in enumerate(labels, start=1):
        name, kind = vocab.names[i], vocab.kinds[i]
        if kind == "region":
            tokens += ["abnormality", "in", name, "."] if present else [name, "normal", "."]
        elif present:
            tokens += [name, "seen", "."]
    return tokens + [EOS]


def contains_phrase(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    n = len(phrase)
    return any(tuple(tokens[i:i + n]) == tuple(phrase) for i in range(len(tokens) - n + 1))


def labels_from_report(tokens: Sequence[str], vocab: EntityVocabulary) -> np.ndarray:
    return np.array([int(contains_phrase(tokens, kw)) for kw in vocab.keywords[1:]], dtype=np.int64)


def lexicon(vocab: EntityVocabulary) -> dict[str, tuple[str, ...]]:
    return {vocab.names[i]: vocab.keywords[i] for i in range(1, vocab.size)}


# --- generation -----------------------------------------------------------
def entity_signatures(cfg: CorpusConfig) -> np.ndarray:
    """(k, span, d_s) rank-1 patterns with unit RMS, fixed by the corpus seed."""
    rng = make_rng(derive_seed(cfg.seed, "signatures"))
    span = min(2, cfg.patches)
    u = rng.normal(size=(cfg.k, span))
    v = rng.normal(size=(cfg.k, cfg.d_s))
    sig = u[:, :, None] * v[:, None, :]
    rms = np.sqrt((sig**2).mean(axis=(1, 2), keepdims=True))
    return sig / rms


def _place(V_f: np.ndarray, sig: np.ndarray, scan: int, rng: np.random.Generator) -> None:
    span = sig.shape[0]
    start = int(rng.integers(0, V_f.shape[1] - span + 1))
    V_f[scan, start:start + span] += sig


def make_sample(index: int, split: str, cfg: CorpusConfig, vocab: EntityVocabulary,
                signatures: np.ndarray) -> SyntheticSample:
    rng = make_rng(derive_seed(cfg.seed, index))
    labels = (rng.random(cfg.k) < cfg.prevalences()).astype(np.int64)
    V_f = np.zeros((cfg.n_scans, cfg.patches, cfg.d_s))
    scan_of: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    present_regions = [i for i in vocab.regions if labels[i - 1]]
    order = present_regions + [i for i in vocab.lesions if labels[i - 1]]
    for i in order:
        if vocab.kinds[i] == "lesion" and present_regions:
            host = present_regions[int(rng.integers(len(present_regions)))]
            pairs.append((host, i))
            scan = scan_of[host]
        else:
            scan = int(rng.integers(cfg.n_scans))
        scan_of[i] = scan
        _place(V_f, signatures[i - 1], scan, rng)
    if math.isfinite(cfg.snr):
        V_f += rng.normal(scale=1.0 / cfg.snr, size=V_f.shape)
    return SyntheticSample(f"{split}-{index:05d}", V_f, labels, report_from_labels(labels, vocab), sorted(pairs))


def generate_corpus(cfg: CorpusConfig) -> dict[str, list[SyntheticSample]]:
    vocab = default_entities(cfg.k)
    sig = entity_signatures(cfg)
    sizes = cfg.split_sizes()
    out: dict[str, list[SyntheticSample]] = {}
    index = 0
    for split in SPLITS:
        out[split] = []
        for _ in range(sizes[split]):
            out[split].append(make_sample(index, split, cfg, vocab, sig))
            index += 1
    return out


def cooccurrence_stats(samples: Iterable[SyntheticSample], vocab: EntityVocabulary) -> tuple[np.ndarray, int]:
    """Region x lesion counts of ground-truth pairs over a training split, plus the sample count."""
    r_pos = {r: a for a, r in enumerate(vocab.regions)}
    l_pos = {l: b for b, l in enumerate(vocab.lesions)}
    counts = np.zeros((len(r_pos), len(l_pos)), dtype=np.int64)
    total = 0
    for s in samples:
        total += 1
        for r, l in set(map(tuple, s.gt_pairs)):
            counts[r_pos[r], l_pos[l]] += 1
    return counts, total


# --- files ----------------------------------------------------------------
def _encode(s: SyntheticSample) -> str:
    blob = base64.b64encode(np.ascontiguousarray(s.V_f, dtype="<f8").tobytes()).decode("ascii")
    rec = {"id": s.id, "labels": [int(x) for x in s.labels], "gt_pairs": [list(p) for p in s.gt_pairs],
           "report": list(s.report), "shape": list(s.V_f.shape), "features": blob}
    return json.dumps(rec, separators=(",", ":"))


def write_split(path, samples: Sequence[SyntheticSample]) -> None:
    Path(path).write_text("".join(_encode(s) + "\n" for s in samples), encoding="utf-8")


def load_dataset(path) -> list[SyntheticSample]:
    """Read a ``.mdata`` split; records come back in file order."""
    samples = []
    shape = n_labels = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            feat = np.frombuffer(base64.b64decode(rec["features"], validate=True), dtype="<f8")
            rec_shape = tuple(int(x) for x in rec["shape"])
            labels = np.asarray(rec["labels"], dtype=np.int64)
            sample = SyntheticSample(str(rec["id"]), None, labels, [str(t) for t in rec["report"]],
                                     [tuple(int(x) for x in p) for p in rec["gt_pairs"]])
        except (ValueError, KeyError, TypeError) as exc:
            raise DatasetError(f"{path}:{lineno}: malformed record ({exc})") from None
        if feat.size != int(np.prod(rec_shape)):
            raise DatasetError(f"{path}:{lineno}: feature blob has {feat.size} values, shape {rec_shape} "
                               f"needs {int(np.prod(rec_shape))}")
        if shape is not None and (rec_shape != shape or labels.size != n_labels):
            raise DatasetError(f"{path}:{lineno}: shape {rec_shape}/{labels.size} labels differs from "
                               f"earlier records {shape}/{n_labels}")
        shape, n_labels = rec_shape, labels.size
        sample.V_f = feat.reshape(rec_shape).astype(np.float64)
        samples.append(sample)
    return samples


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_lines(cfg: CorpusConfig) -> list[str]:
    d = asdict(cfg)
    d["prevalence"] = ",".join(f"{p:.6g}" for p in cfg.prevalences())
    d["split_ratio"] = ":".join(str(x) for x in cfg.split_ratio)
    return [f"{key} = {d[key]}" for key in sorted(d)]


def write_corpus(cfg: CorpusConfig, out_dir) -> dict[str, list[SyntheticSample]]:
    """Write ``{split}.mdata``, ``graph.txt`` and ``manifest.txt`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(cfg)
    vocab = default_entities(cfg.k)
    (out / "graph.txt").write_text(dump_graph(default_graph(vocab)), encoding="utf-8")
    lines = ["[corpus]"] + config_lines(cfg) + ["", "[files]"]
    for split in SPLITS:
        write_split(out / f"{split}.mdata", corpus[split])
        lines.append(f"{split}.mdata = {len(corpus[split])} {_file_hash(out / f'{split}.mdata')}")
    lines.append(f"graph.txt = {_file_hash(out / 'graph.txt')}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return corpus
