"""
Fair acquisition with a noisy detector
======================================

Labels are unknown for the pool, so each cycle a simulated detector
proposes pseudo-labels and the balanced subset is chosen from those.
Only the labeled images' true labels count toward the reported c_v.
"""

from fairsubset import DetectorNoise, protected_view, run_aloft
from fairsubset.synthetic import CUP_PROFILE, skewed_pool

pool = protected_view(skewed_pool(2000, CUP_PROFILE, seed=3), "cup")
per_cycle = pool.n_rows // 10

# misses one object in five and hallucinates at 5%
noise = DetectorNoise(miss_rate=0.2, false_positive_rate=0.05, seed=3)

print("cycle  labeled   aloft  random")
for seed in range(3):
    fair = run_aloft(pool, 4, per_cycle, 0.1, noise, seed=seed)
    rand = run_aloft(pool, 4, per_cycle, 0.1, noise, seed=seed, method="random")
    for (c, spent, a), (_, _, r) in zip(fair.trajectory, rand.trajectory):
        print(f"{c:>5} {spent:>8} {a:7.3f} {r:7.3f}")
    print()

# without noise the loop reproduces supervised selection exactly
clean = run_aloft(pool, 3, per_cycle, 0.0, DetectorNoise(0, 0), seed=0)
print("noiseless final c_v:", round(clean.labeled_cv(), 4))
