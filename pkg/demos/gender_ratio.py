"""
Curating for a gender ratio
===========================

Select images so every category co-occurs with 'man' and 'woman' within
a ratio band, and balance two exclusive/co-occurring pairs.
"""

import numpy as np

from fairsubset import build_composition, cooccurrence_stats, pair_balance_select, ratio_constrained_select

rng = np.random.default_rng(7)
objects = ["skis", "handbag", "tie", "umbrella", "laptop", "oven"]
lean = {"skis": 0.8, "handbag": 0.25, "tie": 0.9, "umbrella": 0.5, "laptop": 0.6, "oven": 0.35}

records = []
for n in range(600):
    present = [o for o in objects if rng.random() < 0.3] or [objects[n % len(objects)]]
    # each image shows a man with probability set by its most gendered object
    p_man = max(lean[o] for o in present)
    records.append((f"im{n:04d}", ["man" if rng.random() < p_man else "woman", *present]))
C = build_composition(records, ["man", "woman", *objects])

print("before:", cooccurrence_stats(C, ["man", "woman"]).as_dict())

for alpha in (2.0, 1.5, 1.2):
    sel = ratio_constrained_select(C, "man", "woman", alpha)
    kept = C.cells[list(sel.indices)]
    ratios = {}
    for j, o in enumerate(objects, start=2):
        m, w = kept[kept[:, 0] == 1, j].sum(), kept[kept[:, 1] == 1, j].sum()
        ratios[o] = round(float(m / w), 2) if w else None
    print(f"alpha {alpha}: kept {len(sel)} images, feasible={sel.report['feasible']}, man/woman per object {ratios}")

# skis show up mostly with men; handbags mostly with women
sel = pair_balance_select(C, [("skis", "man"), ("handbag", "woman")], 150)
for p in sel.report["pairs"]:
    print(p)
