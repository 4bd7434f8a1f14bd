"""Report-generation metrics.

NLG: corpus BLEU-4, ROUGE-L (LCS F-measure, beta 1.2), CIDEr (TF-IDF
cosine over 1..4-grams, x10) and an exact-match METEOR variant. Clinical:
keyword precision/recall/F1 with a per-entity breakdown.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

Tokens = Sequence[str]
Pair = tuple[Tokens, Tokens]  # (candidate, reference)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EvalPair:
    sample_id: str
    candidate: tuple[str, ...]
    reference: tuple[str, ...]

    def __post_init__(self):
        if not self.reference:
            raise MetricError(f"sample {self.sample_id}: empty reference")

    def __iter__(self):
        # unpacks as (candidate, reference) so EvalPairs work wherever plain pairs do
        return iter((self.candidate, self.reference))


class SingleDocumentCorpus(UserWarning):
    """CIDEr on a single reference: every n-gram has zero IDF."""


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check(pairs) -> list[Pair]:
    pairs = [(list(c), list(r)) for c, r in pairs]
    if not pairs:
        raise MetricError("no candidate/reference pairs")
    return pairs


def bleu4(pairs, smoothing: bool = False) -> float:
    """Corpus BLEU with uniform weights over 1..4-grams and a brevity penalty.

    ``smoothing`` adds one to numerator and denominator of the 2..4-gram
    precisions.
    """
    pairs = _check(pairs)
    matched = np.zeros(4)
    total = np.zeros(4)
    cand_len = ref_len = 0
    for cand, ref in pairs:
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            c, r = ngrams(cand, n), ngrams(ref, n)
            matched[n - 1] += sum(min(cnt, r[g]) for g, cnt in c.items())
            total[n - 1] += sum(c.values())
    if smoothing:
        matched[1:] += 1
        total[1:] += 1
    if cand_len == 0 or (matched == 0).any():
        return 0.0
    log_p = np.log(matched / total).mean()
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return float(bp * math.exp(log_p))


def lcs_length(a: Tokens, b: Tokens) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(pairs, beta: float = 1.2) -> float:
    scores = []
    for cand, ref in _check(pairs):
        lcs = lcs_length(cand, ref)
        if lcs == 0:
            scores.append(0.0)
            continue
        p, r = lcs / len(cand), lcs / len(ref)
        scores.append((1 + beta**2) * p * r / (r + beta**2 * p))
    return float(np.mean(scores))


def cider(pairs, max_n: int = 4) -> float:
    """Mean over pairs of the average n-gram TF-IDF cosine, scaled by 10.

    Document frequencies come from the references.
    """
    pairs = _check(pairs)
    n_docs = len(pairs)
    if n_docs == 1:
        warnings.warn("CIDEr over a single reference: IDF is zero everywhere, only exact matches score", SingleDocumentCorpus)
    df = [Counter() for _ in range(max_n)]
    for _, ref in pairs:
        for n in range(1, max_n + 1):
            df[n - 1].update(ngrams(ref, n).keys())
    log_n = math.log(n_docs)

    def vec(tokens, n):
        return {g: cnt * (log_n - math.log(df[n - 1][g] if df[n - 1][g] else 1.0))
                for g, cnt in ngrams(tokens, n).items()}

    scores = []
    for cand, ref in pairs:
        sims = []
        for n in range(1, max_n + 1):
            vc, vr = vec(cand, n), vec(ref, n)
            sc = sum(v * v for v in vc.values())
            sr = sum(v * v for v in vr.values())
            dot = sum(v * vr.get(g, 0.0) for g, v in vc.items())
            if sc > 0 and sr > 0:
                # sqrt(s*s) == s in IEEE arithmetic, so identical vectors give exactly 1
                sims.append(dot / math.sqrt(sc * sr))
            else:
                # no informative n-grams on one side: only an exact, non-empty n-gram match counts
                grams = ngrams(cand, n)
                sims.append(1.0 if grams and grams == ngrams(ref, n) else 0.0)
        scores.append(10.0 * float(np.mean(sims)))
    return float(np.mean(scores))


def meteor_alignment(cand: Tokens, ref: Tokens) -> list[tuple[int, int]]:
    """Exact-match unigram alignment: each candidate token takes the leftmost unused equal reference token."""
    used = [False] * len(ref)
    align = []
    for i, tok in enumerate(cand):
        for j, rtok in enumerate(ref):
            if not used[j] and rtok == tok:
                used[j] = True
                align.append((i, j))
                break
    return align


def meteor_pair(cand: Tokens, ref: Tokens, alpha: float = 0.9, gamma: float = 0.5, beta: float = 3.0) -> float:
    align = meteor_alignment(cand, ref)
    m = len(align)
    if m == 0:
        return 0.0
    p, r = m / len(cand), m / len(ref)
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    chunks = 1 + sum(1 for (i0, j0), (i1, j1) in zip(align, align[1:]) if not (i1 == i0 + 1 and j1 == j0 + 1))
    return fmean * (1.0 - gamma * (chunks / m) ** beta)


def meteor_lite(pairs) -> float:
    """Mean per-pair METEOR with exact matching only (no stems or synonyms)."""
    return float(np.mean([meteor_pair(c, r) for c, r in _check(pairs)]))


# --- clinical keyword metrics ---------------------------------------------
def _contains(tokens: Tokens, phrase: Tokens) -> bool:
    n = len(phrase)
    return any(tuple(tokens[i:i + n]) == tuple(phrase) for i in range(len(tokens) - n + 1))


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision/recall/F1; an empty denominator scores 1 when the opposite error count is also zero."""
    p = tp / (tp + fp) if tp + fp else (1.0 if fn == 0 else 0.0)
    r = tp / (tp + fn) if tp + fn else (1.0 if fp == 0 else 0.0)
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class EntityF1Report:
    names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def median(self) -> float:
        return float(np.median(self.f1))

    @property
    def iqr(self) -> float:
        q1, q3 = np.percentile(self.f1, [25, 75])
        return float(q3 - q1)

    @property
    def variance(self) -> float:
        return float(np.var(self.f1))


@dataclass
class KeywordScores:
    precision: float
    recall: float
    f1: float
    per_entity: EntityF1Report


def keyword_prf(pairs, lexicon: Mapping[str, Tokens]) -> KeywordScores:
    """Micro-averaged keyword P/R/F1 plus per-entity scores across samples."""
    if not lexicon:
        raise MetricError("empty keyword lexicon")
    pairs = _check(pairs)
    names = list(lexicon)
    counts = np.zeros((len(names), 3), dtype=np.int64)  # tp, fp, fn
    support = np.zeros(len(names), dtype=np.int64)
    for cand, ref in pairs:
        for e, name in enumerate(names):
            c, r = _contains(cand, lexicon[name]), _contains(ref, lexicon[name])
            counts[e] += (c and r, c and not r, r and not c)
            support[e] += r
    per = np.array([prf(*row) for row in counts])
    p, r, f = prf(*counts.sum(axis=0))
    return KeywordScores(p, r, f, EntityF1Report(names, per[:, 0], per[:, 1], per[:, 2], support))


# --- reports --------------------------------------------------------------
def evaluate(pairs, lexicon: Mapping[str, Tokens], smoothing: bool = False) -> tuple[dict[str, float], KeywordScores]:
    pairs = _check(pairs)
    kw = keyword_prf(pairs, lexicon)
    scores = {
        "BLEU-4": bleu4(pairs, smoothing=smoothing),
        "METEOR-lite": meteor_lite(pairs),
        "ROUGE-L": rouge_l(pairs),
        "CIDEr": cider(pairs),
        "CE-Precision": kw.precision,
        "CE-Recall": kw.recall,
        "CE-F1": kw.f1,
        "entity-F1-median": kw.per_entity.median,
        "entity-F1-IQR": kw.per_entity.iqr,
        "entity-F1-variance": kw.per_entity.variance,
    }
    return scores, kw


def write_metrics_csv(path, scores: Mapping[str, float], notes: Mapping[str, str] | None = None) -> None:
    notes = notes or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value", "note"])
        for name, val in scores.items():
            w.writerow([name, repr(float(val)), notes.get(name, "")])


def write_entity_f1_csv(path, report: EntityF1Report) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity", "precision", "recall", "f1", "support"])
        for i, name in enumerate(report.names):
            w.writerow([name, repr(float(report.precision[i])), repr(float(report.recall[i])),
                        repr(float(report.f1[i])), int(report.support[i])])


def f1_boxplot_svg(series: Mapping[str, Sequence[float]], width: int = 480, height: int = 300) -> str:
    """Minimal SVG box plot of per-entity F1 distributions, one box per named series."""
    pad, top, bottom = 40, 20, 40
    plot_h = height - top - bottom
    slot = (width - 2 * pad) / max(len(series), 1)

    def y(v):
        return top + (1.0 - v) * plot_h

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<line x1="{pad}" y1="{top}" x2="{pad}" y2="{top + plot_h}" stroke="black"/>']
    for tick in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{pad - 30}" y="{y(tick) + 4:.1f}" font-size="10">{tick:.1f}</text>')
    for n, (label, vals) in enumerate(series.items()):
        v = np.asarray(vals, dtype=float)
        q0, q1, q2, q3, q4 = np.percentile(v, [0, 25, 50, 75, 100])
        cx = pad + slot * (n + 0.5)
        half = slot * 0.25
        parts += [
            f'<line x1="{cx:.1f}" y1="{y(q4):.1f}" x2="{cx:.1f}" y2="{y(q0):.1f}" stroke="black"/>',
            f'<rect x="{cx - half:.1f}" y="{y(q3):.1f}" width="{2 * half:.1f}" '
            f'height="{max(y(q1) - y(q3), 0.5):.1f}" fill="#9cc" stroke="black"/>',
            f'<line x1="{cx - half:.1f}" y1="{y(q2):.1f}" x2="{cx + half:.1f}" y2="{y(q2):.1f}" '
            f'stroke="black" stroke-width="2"/>',
            f'<text x="{cx - half:.1f}" y="{height - 15}" font-size="10">{label}</text>',
        ]
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
