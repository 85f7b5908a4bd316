"""
Balancing the context of a protected category
=============================================

Build a synthetic pool where 'cup' co-occurs with other objects at
skewed rates, then compare a balanced subset against the baselines.
"""

import numpy as np

from fairsubset import baseline_select, fair_select, protected_view
from fairsubset.synthetic import CUP_PROFILE, skewed_pool

# 2000 cup images; each co-occurring object appears at its profile rate
pool = protected_view(skewed_pool(2000, CUP_PROFILE, seed=0), "cup")
names = pool.cocats.names
print("co-occurring:", ", ".join(names))

# a stand-in for model confidence, used by the weight-based baselines
weights = np.random.default_rng(1).random(pool.n_rows)

rows = []
for pct in (10, 20, 30, 40, 50):
    b = pool.n_rows * pct // 100
    rows.append((pct, "fair", fair_select(pool, b)))
    rows.append((pct, "random", baseline_select(pool, b, "random", seed=pct)))
    rows.append((pct, "ranking", baseline_select(pool, b, "ranking", weights)))
    rows.append((pct, "perclassrank", baseline_select(pool, b, "perclassrank", weights)))

print(f"\n{'%':>3} {'method':<13}" + "".join(f"{n[:6]:>7}" for n in names) + "    c_v")
for pct, method, sel in rows:
    frac = np.array(sel.counts) / len(sel)
    print(f"{pct:>3} {method:<13}" + "".join(f"{f:7.2f}" for f in frac) + f" {sel.achieved_cv:6.3f}")

# the full pool for reference
full = pool.cells.sum(axis=0)
print(f"100 {'full pool':<13}" + "".join(f"{f:7.2f}" for f in full / pool.n_rows)
      + f" {full.std() / full.mean():6.3f}")
