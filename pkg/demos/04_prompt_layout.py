#!/usr/bin/env python3
# How the multi-modal prompt is laid out, with and without each ablation component.

import numpy as np
from entprompt import numerics as N
from entprompt.prompt import PromptToggles, assemble
from entprompt.text import DEFAULT_INSTRUCTION, build_vocabulary

names = ["thalamus", "edema"]
vocab = build_vocabulary(["[global]"] + names)
rng = np.random.default_rng(0)
table = N.Tensor(rng.normal(size=(len(vocab), 6)))
V_e, E_e, S_e = rng.normal(size=(3, 6)), rng.normal(size=(2, 6)), rng.normal(size=(2, 6))

for toggles in (PromptToggles(False, False, False), PromptToggles(True, False, False), PromptToggles(True, True, False)):
    mp = assemble(V_e, E_e if toggles.entity_embed else None, S_e if toggles.status_embed else None, table, vocab,
                  names, DEFAULT_INSTRUCTION, toggles)
    print(toggles, len(mp), "rows")

mp = assemble(V_e, E_e, S_e, table, vocab, names, DEFAULT_INSTRUCTION, PromptToggles())
# position, segment kind, entity index, source row
print(mp.dump())
