"""
Measuring bias in predictions
=============================

Equalized-odds disparity, leakage-based bias amplification and
representational bias on small synthetic outcome sets.
"""

import numpy as np

from fairsubset import (
    LabelVectorRecord,
    OutcomeRecord,
    bias_amplification,
    equalized_odds_disparity,
    representational_bias,
)

rng = np.random.default_rng(0)

# a detector that finds the cup less often next to some objects
hit_rate = {"person": 0.55, "bottle": 0.47, "fork": 0.6, "sink": 0.29}
records = [
    OutcomeRecord(f"{g}{i}", 1, int(rng.random() < p), [g])
    for g, p in hit_rate.items() for i in range(400)
]
eod, tpr = equalized_odds_disparity(records)
print("per-group TPR:", {g: round(t, 3) for g, t in tpr.items()}, "EoD:", round(eod, 4))

# ground-truth labels weakly reveal the attribute; predictions exaggerate it
n = 2000
attr = rng.integers(0, 2, n)
labels = np.column_stack([(rng.random(n) < 0.3 + 0.2 * attr), rng.random(n) < 0.5]).astype(int)
preds = labels.copy()
preds[:, 1] = (rng.random(n) < 0.2 + 0.6 * attr).astype(int)
gt = [LabelVectorRecord(f"i{k}", tuple(v), int(a)) for k, (v, a) in enumerate(zip(labels.tolist(), attr))]
pr = [LabelVectorRecord(f"i{k}", tuple(v), int(a)) for k, (v, a) in enumerate(zip(preds.tolist(), attr))]
print("bias amplification:", round(bias_amplification(gt, pr), 4))

# how much a feature tells about the label, normalized by label entropy
y = rng.integers(0, 4, n)
z_leaky = np.where(rng.random(n) < 0.7, y, rng.integers(0, 4, n))
print("representational bias, leaky feature:", round(representational_bias(zip(z_leaky, y)), 3))
print("representational bias, random feature:", round(representational_bias(zip(rng.integers(0, 4, n), y)), 3))
