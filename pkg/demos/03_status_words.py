#!/usr/bin/env python3
# Per-entity learning status: batch loss -> saturated score -> one of five words.

import numpy as np
from entprompt.status import STATUS_WORDS, bucket, per_entity_loss, saturate, update_ema

rng = np.random.default_rng(0)
labels = (rng.random((4, 5)) < 0.5).astype(float)
# confident and right for entity 0, guessing for 2, confidently wrong for 4
E_p = np.column_stack([np.where(labels[:, 0] > 0, 0.97, 0.03), rng.uniform(0.3, 0.7, 4), np.full(4, 0.5),
                       np.where(labels[:, 3] > 0, 0.7, 0.3), np.where(labels[:, 4] > 0, 0.05, 0.95)])

e_s = per_entity_loss(E_p, labels)
E_s = saturate(e_s)
print("e_s  ", e_s.round(3))
print("E_s  ", E_s.round(3))
print("words", bucket(E_s))
print("vocabulary", STATUS_WORDS)

# at inference the moving average stands in for the live batch score
ema = np.zeros(5)
for step in range(3):
    ema = update_ema(E_s, ema, 0.0 if step == 0 else 0.99)
print("ema  ", ema.round(3))
