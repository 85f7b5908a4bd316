"""Active learning for fair training: pseudo-labels, a simulated detector, the AL loop.

The acquisition step scores candidates on detector pseudo-labels while rows
already labeled contribute their true labels. Every reported cv uses true
labels only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .composition import CategorySet, ProtectedView
from .errors import InfeasibleError, ValidationError
from .inequality import coefficient_of_variation
from .selection import greedy_min_cv

ROW_SUM_TOL = 1e-6


def validate_region_matrix(P, n_categories: int | None = None) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValidationError("region probability matrix must be a nonempty 2-D array")
    if n_categories is not None and P.shape[1] != n_categories + 1:
        raise ValidationError(
            f"region matrix has {P.shape[1]} columns, expected {n_categories + 1} "
            "(categories plus background)"
        )
    if (P < 0).any() or (P > 1).any():
        raise ValidationError("region probabilities must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise ValidationError(f"region row {bad[0]} does not sum to 1")
    return P


def extract_pseudo_labels(P, categories: CategorySet | int) -> frozenset[int]:
    """Categories that are the argmax of at least one region; background never emitted."""
    k = categories if isinstance(categories, int) else len(categories)
    P = validate_region_matrix(P, k)
    winners = np.argmax(P, axis=1)
    return frozenset(int(w) for w in winners if w < k)


@dataclass(frozen=True)
class DetectorNoise:
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    temperature: float = 1.0
    regions_per_image: int = 4
    seed: int = 0

    def __post_init__(self):
        for name in ("miss_rate", "false_positive_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if not self.temperature > 0:
            raise ValidationError("temperature must be positive")
        if int(self.regions_per_image) != self.regions_per_image or self.regions_per_image < 1:
            raise ValidationError("regions_per_image must be a positive integer")


def _region(rng, n_cols: int, peak: int, temperature: float) -> np.ndarray:
    logits = rng.uniform(0.0, 0.5, size=n_cols)
    logits[peak] = 1.0
    z = logits / temperature
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def simulate_detector(truth_row, noise: DetectorNoise, stream: tuple[int, ...] = (0,)) -> np.ndarray:
    """Fake region softmax outputs for one image with known categories.

    Each present category yields a region peaking at it with probability
    ``1 - miss_rate``; each absent category yields one with probability
    ``false_positive_rate``; background regions pad the rest up to
    ``regions_per_image``. ``stream`` (e.g. ``(cycle, image_index)``) picks an
    independent deterministic random stream under ``noise.seed``.
    """
    truth = np.asarray(truth_row).astype(bool)
    k = truth.size
    rng = np.random.default_rng([noise.seed, *stream])
    draws = rng.random(k)
    emitted = np.where(truth, draws >= noise.miss_rate, draws < noise.false_positive_rate)
    peaks = [int(j) for j in np.flatnonzero(emitted)]
    peaks += [k] * max(noise.regions_per_image - len(peaks), 0)
    return np.vstack([_region(rng, k + 1, j, noise.temperature) for j in peaks])


def simulated_pseudo_matrix(cells, rows, noise: DetectorNoise, cycle: int) -> np.ndarray:
    """Pseudo-label rows for ``rows`` of ``cells`` from a fresh simulated detector pass."""
    k = cells.shape[1]
    out = np.zeros((len(rows), k), np.uint8)
    for i, r in enumerate(rows):
        P = simulate_detector(cells[r], noise, stream=(cycle, int(r)))
        out[i, list(extract_pseudo_labels(P, k))] = 1
    return out


def region_file_source(regions: Mapping[str, np.ndarray], image_ids, k: int):
    """Pseudo-label source backed by externally supplied region matrices."""

    def source(cells, rows, cycle):
        out = np.zeros((len(rows), k), np.uint8)
        for i, r in enumerate(rows):
            image_id = image_ids[r]
            if image_id not in regions:
                raise ValidationError(f"no region matrix for image {image_id!r}")
            out[i, list(extract_pseudo_labels(regions[image_id], k))] = 1
        return out

    return source


@dataclass
class ALState:
    """Driver state of one AL run.

    ``pool`` and ``labeled`` hold view row indices; ``trajectory`` holds
    ``(cycle, budget_spent, labeled_cv)`` with one entry per completed cycle
    plus the initial one.
    """

    view: ProtectedView
    pool: list[int]
    labeled: list[int]
    cycle: int = 0
    trajectory: list[tuple[int, int, float]] = field(default_factory=list)
    pseudo_matrix: np.ndarray | None = None
    method: str = "aloft"
    seed: int = 0

    def labeled_cv(self) -> float:
        counts = self.view.cells[self.labeled].sum(axis=0, dtype=np.int64)
        return coefficient_of_variation(counts)

    def pool_view(self) -> ProtectedView:
        rows = np.asarray(self.pool, dtype=np.int64)
        return replace(
            self.view,
            parent_rows=self.view.parent_rows[rows],
            cells=self.view.cells[rows],
            image_ids=tuple(self.view.image_ids[r] for r in rows) if self.view.image_ids else (),
        )


def initial_state(view: ProtectedView, labeled=(), method: str = "aloft", seed: int = 0) -> ALState:
    labeled = [int(i) for i in labeled]
    taken = set(labeled)
    if len(taken) != len(labeled):
        raise ValidationError("initial labeled set has duplicates")
    state = ALState(
        view=view,
        pool=[i for i in range(view.n_rows) if i not in taken],
        labeled=labeled,
        method=method,
        seed=seed,
    )
    state.trajectory.append((0, len(labeled), state.labeled_cv()))
    return state


PseudoSource = Callable[[np.ndarray, list, int], np.ndarray]


def run_aloft_cycle(
    state: ALState,
    budget_b: int,
    noise: DetectorNoise | None = None,
    source: PseudoSource | None = None,
) -> ALState:
    """One acquisition cycle: pseudo-label the pool, fair-select, reveal true labels.

    ``source(cells, pool_rows, cycle)`` overrides the simulated detector. The
    input state is left untouched.
    """
    if budget_b <= 0:
        raise ValidationError("cycle budget must be positive")
    if budget_b > len(state.pool):
        raise InfeasibleError(f"cycle budget {budget_b} exceeds pool of {len(state.pool)}")
    cycle = state.cycle + 1
    view = state.view
    if source is not None:
        pseudo = np.asarray(source(view.cells, state.pool, cycle), dtype=np.uint8)
    else:
        pseudo = simulated_pseudo_matrix(view.cells, state.pool, noise or DetectorNoise(), cycle)
    base = view.cells[state.labeled].sum(axis=0, dtype=np.int64)
    picks = greedy_min_cv(pseudo, budget_b, base_counts=base)
    chosen = [state.pool[i] for i in picks]
    picked = set(chosen)
    new = ALState(
        view=view,
        pool=[r for r in state.pool if r not in picked],
        labeled=state.labeled + chosen,
        cycle=cycle,
        trajectory=list(state.trajectory),
        pseudo_matrix=pseudo,
        method=state.method,
        seed=state.seed,
    )
    new.trajectory.append((cycle, len(new.labeled), new.labeled_cv()))
    return new


def run_random_cycle(state: ALState, budget_b: int) -> ALState:
    """Uniform random acquisition, the baseline ALOFT is compared against."""
    if budget_b > len(state.pool):
        raise InfeasibleError(f"cycle budget {budget_b} exceeds pool of {len(state.pool)}")
    cycle = state.cycle + 1
    rng = np.random.default_rng([state.seed, cycle, 1])
    picks = rng.choice(len(state.pool), size=budget_b, replace=False)
    chosen = [state.pool[i] for i in picks]
    picked = set(chosen)
    new = replace(
        state,
        pool=[r for r in state.pool if r not in picked],
        labeled=state.labeled + chosen,
        cycle=cycle,
        trajectory=list(state.trajectory),
        pseudo_matrix=None,
    )
    new.trajectory.append((cycle, len(new.labeled), new.labeled_cv()))
    return new


def run_aloft(
    view: ProtectedView,
    cycles: int,
    budget_per_cycle: int,
    initial_random_fraction: float = 0.1,
    noise: DetectorNoise | None = None,
    seed: int = 0,
    method: str = "aloft",
    source: PseudoSource | None = None,
) -> ALState:
    """Seed a random labeled fraction, then run ``cycles`` acquisition cycles.

    ``method="random"`` swaps the fair acquisition for uniform sampling while
    keeping the same initial labeled set, so runs with equal seeds are paired.
    """
    if not 0.0 <= initial_random_fraction < 1.0:
        raise ValidationError("initial_random_fraction must be in [0, 1)")
    if cycles < 0:
        raise ValidationError("cycles must be nonnegative")
    if method not in ("aloft", "random"):
        raise ValidationError(f"unknown AL method {method!r}")
    n = view.n_rows
    n_init = math.floor(initial_random_fraction * n)
    if cycles and budget_per_cycle <= 0:
        raise ValidationError("budget per cycle must be positive")
    if n_init + cycles * budget_per_cycle > n:
        raise InfeasibleError(
            f"initial {n_init} + {cycles} x {budget_per_cycle} exceeds pool of {n}"
        )
    rng = np.random.default_rng([seed, 0, 0])
    init = sorted(int(i) for i in rng.choice(n, size=n_init, replace=False))
    state = initial_state(view, init, method=method, seed=seed)
    if noise is None:
        noise = DetectorNoise(seed=seed)
    for _ in range(cycles):
        if method == "random":
            state = run_random_cycle(state, budget_per_cycle)
        else:
            state = run_aloft_cycle(state, budget_per_cycle, noise, source)
    return state
