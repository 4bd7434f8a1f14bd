#!/usr/bin/env python3
# Report metrics on a handful of hand-written pairs.

from entprompt import metrics as M

pairs = [("abnormality in thalamus . edema seen .".split(), "abnormality in thalamus . edema seen .".split()),
         ("abnormality in thalamus .".split(), "abnormality in thalamus . hematoma seen .".split()),
         ("no abnormality .".split(), "abnormality in ventricle . edema seen .".split())]

print("BLEU-4     ", M.bleu4(pairs))
print("ROUGE-L    ", M.rouge_l(pairs))
print("CIDEr      ", M.cider(pairs))
print("METEOR-lite", M.meteor_lite(pairs))

lexicon = {"thalamus": ("in", "thalamus"), "ventricle": ("in", "ventricle"), "edema": ("edema", "seen"),
           "hematoma": ("hematoma", "seen")}
kw = M.keyword_prf(pairs, lexicon)
print("keyword P/R/F1", round(kw.precision, 3), round(kw.recall, 3), round(kw.f1, 3))
for name, f1 in zip(kw.per_entity.names, kw.per_entity.f1):
    print(f"  {name:10s} {f1:.3f}")
print("per-entity F1 variance", kw.per_entity.variance)
