"""Entity vocabulary and the explicit (expert) adjacency matrix.

Index 0 is always the global entity. Regions and lesions follow in any
order; edges among regions (t2t) and among lesions (l2l) are fixed priors,
while region-lesion (t2l) edges come either from the ground-truth pairs of a
training sample or, at inference, from co-occurrence statistics of the
training split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GLOBAL = "[global]"
KINDS = ("global", "region", "lesion")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class EntityVocabulary:
    names: tuple[str, ...]
    kinds: tuple[str, ...]
    keywords: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if len(self.names) != len(self.kinds):
            raise GraphError("names and kinds differ in length")
        if len(self.names) < 2:
            raise GraphError("need the global entity plus at least one named entity")
        if self.kinds[0] != "global" or self.kinds.count("global") != 1:
            raise GraphError("exactly one global entity is required, at index 0")
        for kind in self.kinds:
            if kind not in KINDS:
                raise GraphError(f"unknown entity kind {kind!r}")
        if len(set(self.names)) != len(self.names):
            raise GraphError("entity names must be unique")
        if self.keywords and len(self.keywords) != len(self.names):
            raise GraphError("keywords must be given for every entity or none")

    @property
    def k(self) -> int:
        return len(self.names) - 1

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def regions(self) -> list[int]:
        return [i for i, kd in enumerate(self.kinds) if kd == "region"]

    @property
    def lesions(self) -> list[int]:
        return [i for i, kd in enumerate(self.kinds) if kd == "lesion"]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GraphError(f"unknown entity {name!r}") from None


@dataclass
class ExplicitGraph:
    vocab: EntityVocabulary
    edges_t2t: list[tuple[int, int]] = field(default_factory=list)
    edges_l2l: list[tuple[int, int]] = field(default_factory=list)
    cooccurrence: np.ndarray | None = None
    total_samples: int = 0
    tau: float = 0.1

    def __post_init__(self):
        self.edges_t2t = [self._check_pair(e, "region", "region", "t2t") for e in self.edges_t2t]
        self.edges_l2l = [self._check_pair(e, "lesion", "lesion", "l2l") for e in self.edges_l2l]
        shape = (len(self.vocab.regions), len(self.vocab.lesions))
        if self.cooccurrence is None:
            self.cooccurrence = np.zeros(shape, dtype=np.int64)
        self.cooccurrence = np.asarray(self.cooccurrence, dtype=np.int64)
        if self.cooccurrence.shape != shape:
            raise GraphError(f"co-occurrence counts must be {shape}, got {self.cooccurrence.shape}")
        if (self.cooccurrence < 0).any():
            raise GraphError("co-occurrence counts must be non-negative")

    def _check_pair(self, pair, kind_a: str, kind_b: str, label: str) -> tuple[int, int]:
        i, j = (int(x) for x in pair)
        for idx in (i, j):
            if not 0 <= idx < self.vocab.size:
                raise GraphError(f"{label} edge references unknown entity index {idx}")
        if self.vocab.kinds[i] != kind_a or self.vocab.kinds[j] != kind_b:
            raise GraphError(
                f"{label} edge ({i}, {j}) joins {self.vocab.kinds[i]}/{self.vocab.kinds[j]}, "
                f"expected {kind_a}/{kind_b}")
        return i, j

    def with_statistics(self, counts: np.ndarray, total_samples: int) -> "ExplicitGraph":
        return ExplicitGraph(self.vocab, list(self.edges_t2t), list(self.edges_l2l),
                             np.asarray(counts), int(total_samples), self.tau)


def _base_matrix(graph: ExplicitGraph) -> np.ndarray:
    n = graph.vocab.size
    m = np.eye(n)
    m[0, :] = 1.0
    m[:, 0] = 1.0
    for i, j in graph.edges_t2t + graph.edges_l2l:
        m[i, j] = m[j, i] = 1.0
    return m


def build_M_E_train(vocab: EntityVocabulary, graph: ExplicitGraph, report_entity_pairs) -> np.ndarray:
    """Explicit adjacency for one training sample, using its ground-truth region-lesion pairs."""
    if graph.vocab != vocab:
        raise GraphError("graph was built for a different vocabulary")
    m = _base_matrix(graph)
    for pair in report_entity_pairs:
        i, j = graph._check_pair(pair, "region", "lesion", "report")
        m[i, j] = m[j, i] = 1.0
    return m


def build_M_E_infer(vocab: EntityVocabulary, graph: ExplicitGraph) -> np.ndarray:
    """Explicit adjacency from training statistics alone; shared by every evaluation sample."""
    if graph.vocab != vocab:
        raise GraphError("graph was built for a different vocabulary")
    if not 0.0 <= graph.tau <= 1.0:
        raise GraphError(f"threshold tau must lie in [0, 1], got {graph.tau}")
    m = _base_matrix(graph)
    if graph.total_samples > 0:
        freq = graph.cooccurrence / graph.total_samples
        regions, lesions = vocab.regions, vocab.lesions
        for a, b in zip(*np.nonzero(freq >= graph.tau)):
            i, j = regions[a], lesions[b]
            m[i, j] = m[j, i] = 1.0
    return m


def fuse(M_E, M_I, alpha_E: float = 0.9, alpha_I: float = 0.1):
    """Weighted sum ``alpha_E * M_E + alpha_I * M_I``; works on arrays or Tensors."""
    if alpha_E < 0 or alpha_I < 0:
        raise GraphError("fusion weights must be non-negative")
    if np.shape(getattr(M_E, "data", M_E)) != np.shape(getattr(M_I, "data", M_I)):
        raise GraphError(f"fuse: shape mismatch {np.shape(getattr(M_E, 'data', M_E))} "
                         f"vs {np.shape(getattr(M_I, 'data', M_I))}")
    return M_E * alpha_E + M_I * alpha_I


# --- graph file ------------------------------------------------------------
def load_graph(path, tau: float = 0.1) -> ExplicitGraph:
    """Parse ``entity <index> <name> <kind>``, ``keyword <index> <tokens...>`` and
    ``edge t2t|l2l <i> <j>`` lines. Blank lines and ``#`` comments are ignored."""
    entities: dict[int, tuple[str, str]] = {}
    keywords: dict[int, tuple[str, ...]] = {}
    edges: dict[str, list[tuple[int, int]]] = {"t2t": [], "l2l": []}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "entity" and len(parts) == 4:
                entities[int(parts[1])] = (parts[2], parts[3])
            elif parts[0] == "keyword" and len(parts) >= 3:
                keywords[int(parts[1])] = tuple(parts[2:])
            elif parts[0] == "edge" and len(parts) == 4 and parts[1] in edges:
                edges[parts[1]].append((int(parts[2]), int(parts[3])))
            else:
                raise ValueError
        except ValueError:
            raise GraphError(f"{path}:{lineno}: malformed record {raw!r}") from None
    if sorted(entities) != list(range(len(entities))):
        raise GraphError(f"{path}: entity indices must be 0..n-1")
    order = range(len(entities))
    kw = tuple(keywords.get(i, ()) for i in order) if keywords else ()
    vocab = EntityVocabulary(tuple(entities[i][0] for i in order), tuple(entities[i][1] for i in order), kw)
    return ExplicitGraph(vocab, edges["t2t"], edges["l2l"], tau=tau)


def dump_graph(graph: ExplicitGraph) -> str:
    v = graph.vocab
    lines = [f"entity {i} {name} {kind}" for i, (name, kind) in enumerate(zip(v.names, v.kinds))]
    for i, kw in enumerate(v.keywords):
        if kw:
            lines.append(f"keyword {i} {' '.join(kw)}")
    lines += [f"edge t2t {i} {j}" for i, j in graph.edges_t2t]
    lines += [f"edge l2l {i} {j}" for i, j in graph.edges_l2l]
    return "\n".join(lines) + "\n"
