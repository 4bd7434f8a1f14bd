#!/usr/bin/env python3
# Explicit and implicit entity relations and the fused attention mask.

import numpy as np
from entprompt import kja as K
from entprompt.data import default_entities, default_graph, generate_corpus, CorpusConfig, cooccurrence_stats
from entprompt.graph import build_M_E_infer, build_M_E_train

vocab = default_entities(6)
print(vocab.names)
graph = default_graph(vocab, tau=0.1)

corpus = generate_corpus(CorpusConfig(n_total=200, k=6, n_scans=2, d_s=8))
sample = corpus["train"][0]
print(sample.id, "labels", sample.labels, "pairs", sample.gt_pairs)

# training mode: the sample's own region-lesion pairs
M_E = build_M_E_train(vocab, graph, sample.gt_pairs)
print("M_E (train)\n", M_E.astype(int))

# inference mode: pairs that co-occur in at least tau of the training reports
counts, total = cooccurrence_stats(corpus["train"], vocab)
M_E_inf = build_M_E_infer(vocab, graph.with_statistics(counts, total))
print("M_E (inference)\n", M_E_inf.astype(int))

# implicit relations from entity features, then the weighted fusion
params = K.KJAParams(8, 8, 8, np.random.default_rng(0), heads=2)
feats = np.random.default_rng(1).normal(size=(len(vocab.names), 8))
M_I = K.predict_implicit(feats, params).data
print("M_I symmetric:", np.array_equal(M_I, M_I.T), "range", M_I.min().round(3), M_I.max().round(3))
M_adj = 0.9 * M_E_inf + 0.1 * M_I
print("M_adj row 0", M_adj[0].round(3))

# masked-out pairs get log(1e-30) added to their attention logits
_, probs = K.masked_self_attend(feats, M_adj, params, return_probs=True)
print("attention row 0", probs[0].data[0, 0].round(4))
