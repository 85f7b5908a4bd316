"""Acceptance criteria 1-9, each at its stated tolerance.

The terminal summary prints one ``criterion N: PASS/FAIL`` line per criterion.
"""

import json
import math

import numpy as np
import pytest

from fairsubset import (
    CategorySet,
    DetectorNoise,
    LabelVectorRecord,
    bias_amplification,
    brute_force_select,
    fair_select,
    fit_attacker,
    formats,
    generalized_entropy_index,
    leakage,
    protected_view,
    quadratic_objective,
    representational_bias,
    run_aloft,
)
from fairsubset.cli import main
from fairsubset.composition import ProtectedView, selection_counts
from fairsubset.inequality import coefficient_of_variation
from fairsubset.metrics import eod_from_tpr
from fairsubset.selection import baseline_select
from fairsubset.synthetic import CUP_PROFILE, planted_one_hot, random_view_cells, skewed_pool

from oracles import exact_cv


def view_of(cells):
    cells = np.asarray(cells, dtype=np.uint8)
    names = tuple(f"c{j}" for j in range(cells.shape[1]))
    return ProtectedView("p", np.arange(cells.shape[0]), cells, CategorySet(names))


# 1 -------------------------------------------------------------------------
# supervised per-class TPR table for 'cup': (budget %, method, ten TPRs, printed EoD)
SUPERVISED_TPR = [
    (10, "Random", [0.53, 0.56, 0.47, 0.58, 0.45, 0.52, 0.6, 0.54, 0.35, 0.29], 0.1009),
    (10, "Ranking", [0.51, 0.55, 0.45, 0.56, 0.45, 0.51, 0.6, 0.53, 0.36, 0.27], 0.1002),
    (10, "Per-class rank", [0.51, 0.52, 0.45, 0.55, 0.42, 0.44, 0.54, 0.5, 0.25, 0.25], 0.11),
    (10, "Threshold", [0.53, 0.58, 0.47, 0.59, 0.45, 0.56, 0.63, 0.56, 0.34, 0.56], 0.118),
    (10, "Ours", [0.5, 0.55, 0.46, 0.56, 0.46, 0.53, 0.59, 0.52, 0.37, 0.31], 0.087),
    (20, "Random", [0.55, 0.59, 0.5, 0.62, 0.47, 0.54, 0.59, 0.54, 0.35, 0.3], 0.1051),
    (20, "Ranking", [0.56, 0.6, 0.5, 0.61, 0.48, 0.57, 0.62, 0.57, 0.42, 0.32], 0.095),
    (20, "Per-class rank", [0.52, 0.55, 0.44, 0.56, 0.42, 0.53, 0.6, 0.49, 0.32, 0.24], 0.114),
    (20, "Threshold", [0.55, 0.59, 0.47, 0.6, 0.45, 0.56, 0.63, 0.55, 0.38, 0.3], 0.106),
    (20, "Ours", [0.56, 0.6, 0.5, 0.61, 0.48, 0.57, 0.62, 0.57, 0.42, 0.32], 0.0959),
    (30, "Random", [0.56, 0.61, 0.49, 0.62, 0.49, 0.56, 0.64, 0.57, 0.38, 0.32], 0.1051),
    (30, "Ranking", [0.57, 0.62, 0.51, 0.63, 0.5, 0.6, 0.66, 0.57, 0.41, 0.31], 0.108),
    (30, "Per-class rank", [0.58, 0.58, 0.49, 0.61, 0.47, 0.54, 0.6, 0.52, 0.34, 0.25], 0.118),
    (30, "Threshold", [0.6, 0.64, 0.53, 0.64, 0.52, 0.65, 0.69, 0.62, 0.46, 0.38], 0.098),
    (30, "Ours", [0.56, 0.6, 0.51, 0.6, 0.51, 0.56, 0.61, 0.56, 0.42, 0.35], 0.084),
    (40, "Random", [0.58, 0.63, 0.51, 0.63, 0.51, 0.6, 0.65, 0.57, 0.41, 0.34], 0.1017),
    (40, "Ranking", [0.59, 0.63, 0.54, 0.65, 0.52, 0.62, 0.68, 0.57, 0.45, 0.33], 0.1049),
    (40, "Per-class rank", [0.57, 0.58, 0.49, 0.61, 0.46, 0.55, 0.61, 0.54, 0.34, 0.28], 0.113),
    (40, "Threshold", [0.58, 0.61, 0.5, 0.63, 0.5, 0.59, 0.65, 0.56, 0.41, 0.3], 0.109),
    (40, "Ours", [0.57, 0.61, 0.52, 0.62, 0.53, 0.59, 0.63, 0.57, 0.42, 0.39], 0.082),
    (50, "Random", [0.61, 0.65, 0.55, 0.66, 0.53, 0.62, 0.68, 0.62, 0.43, 0.35], 0.1071),
    (50, "Ranking", [0.6, 0.63, 0.52, 0.64, 0.53, 0.6, 0.68, 0.58, 0.44, 0.33], 0.1048),
    (50, "Per-class rank", [0.59, 0.6, 0.51, 0.63, 0.5, 0.57, 0.63, 0.56, 0.37, 0.27], 0.118),
    (50, "Threshold", [0.58, 0.62, 0.58, 0.62, 0.5, 0.59, 0.65, 0.56, 0.41, 0.25], 0.115),
    (50, "Ours", [0.58, 0.62, 0.53, 0.64, 0.53, 0.61, 0.64, 0.57, 0.41, 0.43], 0.081),
]


@pytest.mark.parametrize(
    "pct, method, tprs, printed", SUPERVISED_TPR, ids=[f"{p}-{m}" for p, m, _, _ in SUPERVISED_TPR]
)
def test_criterion_1_eod_table_row(pct, method, tprs, printed):
    assert abs(eod_from_tpr(tprs) - printed) <= 0.002


def test_criterion_1_headline_value():
    assert round(eod_from_tpr(SUPERVISED_TPR[0][2]), 4) == 0.1009


# 2 -------------------------------------------------------------------------
def test_criterion_2_quadratic_form_equals_cv_squared():
    rng = np.random.default_rng(20)
    for _ in range(100):
        n, k = int(rng.integers(1, 51)), int(rng.integers(2, 13))
        cells = random_view_cells(rng, n, k)
        cells[0, int(rng.integers(k))] = 1
        sel = [0, *rng.choice(np.arange(1, n), size=int(rng.integers(0, n)), replace=False)]
        v = view_of(cells)
        assert abs(quadratic_objective(sel, v) - exact_cv(selection_counts(v, sel)) ** 2) < 1e-10


# 3 -------------------------------------------------------------------------
def test_criterion_3_gei_identity_and_continuity():
    rng = np.random.default_rng(30)
    for _ in range(100):
        v = rng.uniform(0.01, 100, size=int(rng.integers(2, 20)))
        assert abs(generalized_entropy_index(v, 2) - coefficient_of_variation(v) ** 2 / 2) < 1e-10
        g0, g1 = generalized_entropy_index(v, 0), generalized_entropy_index(v, 1)
        assert abs(generalized_entropy_index(v, 1e-6) - g0) < 1e-4
        assert abs(generalized_entropy_index(v, 1 + 1e-6) - g1) < 1e-4
        assert abs(generalized_entropy_index(v, 1 - 1e-6) - g1) < 1e-4


# 4 -------------------------------------------------------------------------
def oracle_instances(seed=0, count=50, cap=2_000_000):
    """Random 35%-dense views, 8-24 rows, 3-10 columns, any budget the oracle can enumerate."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        while True:
            n, k = int(rng.integers(8, 25)), int(rng.integers(3, 11))
            b = int(rng.integers(2, n))
            if math.comb(n, b) <= cap:
                break
        yield view_of(random_view_cells(rng, n, k)), b


@pytest.fixture(scope="module")
def oracle_pairs():
    return [
        (fair_select(v, b).achieved_cv, brute_force_select(v, b).achieved_cv)
        for v, b in oracle_instances()
    ]


def test_criterion_4_oracle_dominates_greedy(oracle_pairs):
    assert all(g >= o - 1e-12 for g, o in oracle_pairs)


def test_criterion_4_greedy_within_125_percent(oracle_pairs):
    close = sum(g <= 1.25 * o + 1e-12 for g, o in oracle_pairs)
    print(f"greedy within 1.25x of oracle on {close}/{len(oracle_pairs)} instances")
    assert close >= 0.9 * len(oracle_pairs)


def test_criterion_4_planted_one_hot_reaches_zero():
    rng = np.random.default_rng(40)
    for seed in range(20):
        k1 = int(rng.integers(2, 10))
        per = rng.integers(3, 12, size=k1)
        cells = planted_one_hot(per.tolist(), seed=seed)
        for m in range(1, int(per.min()) + 1):
            assert fair_select(view_of(cells), m * k1).achieved_cv == 0.0


# 5 -------------------------------------------------------------------------
@pytest.fixture(scope="module")
def cup_view():
    return protected_view(skewed_pool(2000, CUP_PROFILE, seed=5), "cup")


def test_criterion_5_skewed_profile_separation(cup_view):
    full = coefficient_of_variation(cup_view.cells.sum(axis=0))
    assert abs(full - 0.48) < 0.05
    b = cup_view.n_rows // 10
    fair = fair_select(cup_view, b).achieved_cv
    rand = [baseline_select(cup_view, b, "random", seed=s).achieved_cv for s in range(20)]
    print(f"pool c_v {full:.3f}; fair {fair:.4f}; random {min(rand):.3f}..{max(rand):.3f}")
    assert fair < 0.05
    assert all(abs(r - 0.48) <= 0.10 for r in rand)


# 6 -------------------------------------------------------------------------
def test_criterion_6_noiseless_aloft_equals_supervised():
    rng = np.random.default_rng(60)
    for seed in range(20):
        n, k = int(rng.integers(40, 200)), int(rng.integers(3, 12))
        view = view_of(random_view_cells(rng, n, k))
        cycles = int(rng.integers(1, 5))
        b = int(rng.integers(1, n // cycles + 1))
        state = run_aloft(view, cycles, b, 0.0, DetectorNoise(0, 0, seed=seed), seed=seed)
        assert state.labeled == list(fair_select(view, cycles * b).indices)


# 7 -------------------------------------------------------------------------
def test_criterion_7_aloft_beats_random_under_noise(cup_view):
    noise_at = lambda s: DetectorNoise(0.2, 0.05, seed=s)
    per_cycle = cup_view.n_rows // 10
    wins = total = 0
    for seed in range(20):
        a = run_aloft(cup_view, 4, per_cycle, 0.1, noise_at(seed), seed=seed)
        r = run_aloft(cup_view, 4, per_cycle, 0.1, noise_at(seed), seed=seed, method="random")
        for (_, _, ca), (_, _, cr) in zip(a.trajectory[1:], r.trajectory[1:]):
            wins += ca <= cr
            total += 1
    print(f"aloft <= random on {wins}/{total} (seed, cycle) pairs")
    assert wins >= 0.95 * total


# 8 -------------------------------------------------------------------------
def test_criterion_8_metric_properties():
    rng = np.random.default_rng(80)
    labels = rng.integers(0, 2, (500, 5))
    gt = [LabelVectorRecord(f"i{n}", tuple(v), int(v[0] ^ (rng.random() < 0.3))) for n, v in enumerate(labels.tolist())]
    assert bias_amplification(gt, gt) == 0

    y = rng.integers(0, 6, 10_000).tolist()
    assert representational_bias(zip(y, y)) == pytest.approx(1.0, abs=1e-12)
    z = rng.integers(0, 6, 10_000).tolist()
    assert representational_bias(zip(z, y)) < 0.02

    for _ in range(100):
        n = int(rng.integers(10, 300))
        vecs = rng.integers(0, 2, (n, int(rng.integers(1, 6))))
        attrs = (rng.random(n) < rng.uniform(0.05, 0.95)).astype(int)
        data = [LabelVectorRecord(f"i{i}", tuple(v), int(a)) for i, (v, a) in enumerate(zip(vecs.tolist(), attrs))]
        prior = max(attrs.mean(), 1 - attrs.mean())
        assert leakage(data, fit_attacker(data)) >= prior - 1e-12


# 9 -------------------------------------------------------------------------
def _without_timestamp(path):
    m = json.loads(path.read_text())
    m.pop("created_at")
    return json.dumps(m, sort_keys=True)


def test_criterion_9_cli_determinism_and_round_trip(tmp_path):
    C = skewed_pool(400, CUP_PROFILE, seed=9)
    matrix = tmp_path / "M.csv"
    formats.write_matrix_csv(matrix, C)
    back = formats.read_matrix_csv(matrix)
    assert back.image_ids == C.image_ids and np.array_equal(back.cells, C.cells)
    assert formats.matrix_to_csv(back) == matrix.read_text()

    view = protected_view(C, "cup")
    weights = tmp_path / "w.csv"
    weights.write_text("image_id,weight\n" + "".join(f"{i},{(n * 37) % 11 / 10}\n" for n, i in enumerate(view.image_ids)))

    from fairsubset import OutcomeRecord, simulate_detector

    outcomes = tmp_path / "o.jsonl"
    outcomes.write_text(formats.outcomes_to_jsonl(
        [OutcomeRecord(f"{g}{i}", 1, int(i < 3 + g), [g], 0.5) for g in range(4) for i in range(8)]
    ))
    vectors = tmp_path / "v.jsonl"
    vectors.write_text(formats.label_vectors_to_jsonl(
        [LabelVectorRecord(f"i{n}", (n % 2, n % 3 == 0, n % 5 == 0), n % 2) for n in range(60)]
    ))
    zy = tmp_path / "zy.csv"
    zy.write_text("z,y\n" + "".join(f"{n % 3},{n % 4}\n" for n in range(60)))
    regions = tmp_path / "r.csv"
    noise = DetectorNoise(0.2, 0.05, seed=1)
    regions.write_text(formats.region_matrices_to_csv(
        {i: simulate_detector(view.cells[r], noise, stream=(0, r)) for r, i in enumerate(view.image_ids)}
    ))
    for path, reader, writer in (
        (outcomes, formats.read_outcomes, formats.outcomes_to_jsonl),
        (vectors, formats.read_label_vectors, formats.label_vectors_to_jsonl),
        (regions, formats.read_region_matrices, formats.region_matrices_to_csv),
    ):
        assert writer(reader(path)) == path.read_text()

    manifest_runs = {
        "fair": ["select", "--matrix", matrix, "--protected", "cup", "--budget", "0.1", "--seed", "7"],
        "cover": ["select", "--matrix", matrix, "--protected", "cup", "--budget", "0.1", "--init", "cover"],
        "random": ["select", "--matrix", matrix, "--protected", "cup", "--method", "random", "--budget", "25", "--seed", "4"],
        "ranking": ["select", "--matrix", matrix, "--protected", "cup", "--method", "ranking", "--budget", "25", "--weights", weights],
        "perclassrank": ["select", "--matrix", matrix, "--protected", "cup", "--method", "perclassrank", "--budget", "25", "--weights", weights],
        "threshold": ["select", "--matrix", matrix, "--protected", "cup", "--method", "threshold", "--budget", "25", "--weights", weights],
        "ratio": ["select", "--matrix", matrix, "--method", "ratio", "--group-a", "person", "--group-b", "dining table", "--alpha", "1.2"],
        "pair": ["select", "--matrix", matrix, "--method", "pair", "--pairs", "knife:fork,sink:bottle", "--budget", "30"],
    }
    small = tmp_path / "small.csv"
    formats.write_matrix_csv(small, skewed_pool(14, CUP_PROFILE, seed=2))
    manifest_runs["oracle"] = ["oracle", "--matrix", small, "--protected", "cup", "--budget", "4"]
    manifests = {}
    for name, argv in manifest_runs.items():
        outs = [tmp_path / f"{name}-{t}.json" for t in "ab"]
        for out in outs:
            assert main([str(a) for a in argv] + ["--out", str(out)]) == 0, name
        assert _without_timestamp(outs[0]) == _without_timestamp(outs[1]), name
        m = formats.read_manifest(outs[0])
        assert formats.manifest_to_json(m) == outs[0].read_text(), name
        manifests[name] = outs[0]

    table_runs = {
        "stats": ["stats", "--matrix", matrix, "--attributes", "person,dining table"],
        "eod": ["metrics", "--eod", outcomes],
        "amp": ["metrics", "--bias-amp", vectors, vectors],
        "rep": ["metrics", "--rep-bias", zy],
        "al": ["simulate-al", "--matrix", matrix, "--protected", "cup", "--cycles", "4", "--budget", "0.1",
               "--init-fraction", "0.1", "--miss", "0.2", "--fp", "0.05", "--seed", "3"],
        "al-random": ["simulate-al", "--matrix", matrix, "--protected", "cup", "--cycles", "2", "--budget", "10",
                      "--method", "random", "--seed", "3"],
        "al-regions": ["simulate-al", "--matrix", matrix, "--protected", "cup", "--cycles", "2", "--budget", "10",
                       "--regions", regions],
        "report": ["report", "--matrix", matrix, *sum((["--manifest", manifests[k]] for k in
                   ("fair", "cover", "random", "ranking", "perclassrank", "threshold")), [])],
        "ingest": ["ingest", matrix, "--format", "csv"],
    }
    for name, argv in table_runs.items():
        outs = [tmp_path / f"{name}-{t}.csv" for t in "ab"]
        for out in outs:
            assert main([str(a) for a in argv] + ["--out", str(out)]) == 0, name
        assert outs[0].read_bytes() == outs[1].read_bytes(), name
    assert (tmp_path / "ingest-a.csv").read_bytes() == matrix.read_bytes()
    traj = tmp_path / "al-a.csv"
    rows = formats.read_trajectory_csv(traj)
    assert formats.trajectory_to_csv(
        [(r["cycle"], r["budget_spent"], r["labeled_cv"]) for r in rows], "aloft", 3
    ) == traj.read_text()
