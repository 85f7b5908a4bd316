"""Subset selectors: greedy fair selection, its exact oracle, and baselines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .composition import CategorySet, CompositionMatrix, ProtectedView
from .errors import InfeasibleError, ValidationError
from .inequality import coefficient_of_variation

METHODS = (
    "fair", "bruteforce", "random", "ranking", "perclassrank", "threshold", "ratio", "pair",
)
BASELINES = ("random", "ranking", "perclassrank", "threshold")
ORACLE_CAP = 2_000_000


@dataclass(frozen=True)
class Selection:
    """Ordered selected row indices plus the provenance of the selection.

    ``indices`` are rows of the view (or of the composition matrix for the
    ``ratio`` and ``pair`` modes), in acquisition order. ``counts`` and
    ``columns`` describe the count vector ``achieved_cv`` was computed on.
    """

    indices: tuple[int, ...]
    method: str
    budget: int
    seed: int = 0
    achieved_cv: float = 0.0
    init: str | None = None
    columns: tuple[str, ...] = ()
    counts: tuple[int, ...] = ()
    violations: tuple[dict, ...] = ()
    report: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.indices)


def _check_budget(budget: int, pool: int) -> int:
    if isinstance(budget, bool) or int(budget) != budget:
        raise ValidationError(f"budget must be an integer, got {budget!r}")
    budget = int(budget)
    if budget <= 0:
        raise ValidationError(f"budget must be positive, got {budget}")
    if budget > pool:
        raise InfeasibleError(f"budget {budget} exceeds pool size {pool}")
    return budget


def greedy_min_cv(
    cells: np.ndarray,
    budget: int,
    *,
    base_counts: np.ndarray | None = None,
    start: Sequence[int] = (),
) -> list[int]:
    """Greedily add rows of ``cells`` minimizing the cv of the running counts.

    Starts from ``base_counts`` (counts contributed by rows outside ``cells``)
    plus the rows in ``start``, then adds rows one at a time until ``budget``
    rows of ``cells`` are chosen. Each step takes the strict minimizer, so
    ties go to the lowest row index.

    Candidates are scored in O(K) from running sums: with ``S1 = sum(n)`` and
    ``S2 = sum(n**2)``, ``cv**2 = L * S2 / S1**2 - 1``. Both sums are exact
    integers, so equal cv values compare equal.
    """
    X = np.asarray(cells, dtype=np.int64)
    n_rows, L = X.shape
    counts = np.zeros(L, np.int64) if base_counts is None else np.array(base_counts, np.int64)
    chosen = list(start)
    available = np.ones(n_rows, dtype=bool)
    for i in chosen:
        available[i] = False
        counts += X[i]
    row_sums = X.sum(axis=1)
    while len(chosen) < budget:
        s1 = counts.sum() + row_sums
        # sum((n + r)**2) - sum(n**2) = sum(2 n r + r) for binary r
        s2 = int((counts**2).sum()) + 2 * (X @ counts) + row_sums
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.where(s1 > 0, (L * s2) / (s1.astype(float) ** 2), 1.0)
        score[~available] = np.inf
        k = int(np.argmin(score))
        chosen.append(k)
        available[k] = False
        counts += X[k]
    return chosen


def _finalize(view_cells, indices, columns, **kw) -> Selection:
    counts = np.asarray(view_cells)[list(indices)].sum(axis=0, dtype=np.int64)
    if counts.size == 0:
        counts = np.zeros(len(columns), np.int64)
    return Selection(
        indices=tuple(int(i) for i in indices),
        achieved_cv=coefficient_of_variation(counts) if counts.size else 0.0,
        columns=tuple(columns),
        counts=tuple(int(c) for c in counts),
        **kw,
    )


def cover_seed(cells: np.ndarray, budget: int) -> list[int]:
    """One image per category, rarest category first, lowest index per category."""
    X = np.asarray(cells)
    freq = X.sum(axis=0)
    order = sorted(range(X.shape[1]), key=lambda j: (freq[j], j))
    chosen: list[int] = []
    covered = np.zeros(X.shape[1], dtype=bool)
    for j in order:
        if len(chosen) >= budget:
            break
        if covered[j] or freq[j] == 0:
            continue
        rows = [i for i in np.flatnonzero(X[:, j]) if i not in chosen]
        if not rows:
            continue
        chosen.append(int(rows[0]))
        covered |= X[rows[0]].astype(bool)
    return chosen


def fair_select(
    view: ProtectedView, budget: int, init: str = "empty", seed: int = 0
) -> Selection:
    """Greedy selection of ``budget`` rows minimizing the coefficient of variation.

    ``init="cover"`` first seeds one image per co-occurring category (see
    :func:`cover_seed`); ``init="empty"`` starts from nothing. The result is
    deterministic; ``seed`` is only recorded.
    """
    budget = _check_budget(budget, view.n_rows)
    if init == "empty":
        start: list[int] = []
    elif init == "cover":
        start = cover_seed(view.cells, budget)
    else:
        raise ValidationError(f"unknown init {init!r}; expected 'empty' or 'cover'")
    indices = greedy_min_cv(view.cells, budget, start=start)
    return _finalize(
        view.cells, indices, view.cocats.names,
        method="fair", budget=budget, seed=seed, init=init,
    )


def _combinations_chunked(n: int, k: int, chunk: int):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def brute_force_select(
    view: ProtectedView, budget: int, cap: int = ORACLE_CAP, seed: int = 0
) -> Selection:
    """Exact minimum-cv subset of exactly ``budget`` rows by full enumeration.

    Ties resolve to the lexicographically smallest index set. Scoring goes
    through the plain mean and population standard deviation of the summed
    counts, not through the greedy's running-sum formula.
    """
    budget = _check_budget(budget, view.n_rows)
    total = math.comb(view.n_rows, budget)
    if total > cap:
        raise InfeasibleError(
            f"instance too large for oracle: C({view.n_rows},{budget}) = {total} > {cap}"
        )
    X = np.asarray(view.cells, dtype=float)
    best_cv, best = math.inf, None
    for block in _combinations_chunked(view.n_rows, budget, 65536):
        counts = X[block].sum(axis=1)
        mu = counts.mean(axis=1)
        sd = counts.std(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cv = np.where(mu > 0, sd / np.where(mu > 0, mu, 1.0), 0.0)
        # first combination within float noise of the block minimum
        k = int(np.flatnonzero(cv <= cv.min() + 1e-12)[0])
        # combinations come in lexicographic order; only a strictly better
        # value from a later block may replace the incumbent
        if cv[k] < best_cv - 1e-12:
            best_cv, best = float(cv[k]), block[k]
    return _finalize(
        view.cells, best, view.cocats.names,
        method="bruteforce", budget=budget, seed=seed,
    )


def _check_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        raise ValidationError("weight-based selection requires weights")
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != n:
        raise ValidationError(f"weight length {w.size} does not match {n} view rows")
    if np.isnan(w).any() or (w < 0).any():
        raise ValidationError("weights must be nonnegative numbers")
    return w


def baseline_select(
    view: ProtectedView,
    budget: int,
    method: str,
    weights=None,
    seed: int = 0,
    threshold: float = 0.5,
) -> Selection:
    """Random, ranking, per-class rank and threshold baselines.

    ``ranking`` takes the ``budget`` largest weights; ``perclassrank`` goes
    round-robin over categories in declared order taking each category's
    highest-weight unselected image; ``threshold`` takes every image with
    weight above ``threshold`` in index order and may return fewer than
    ``budget`` rows.
    """
    budget = _check_budget(budget, view.n_rows)
    n = view.n_rows
    if method == "random":
        rng = np.random.default_rng(seed)
        indices = [int(i) for i in rng.choice(n, size=budget, replace=False)]
    elif method == "ranking":
        w = _check_weights(weights, n)
        indices = [int(i) for i in np.argsort(-w, kind="stable")[:budget]]
    elif method == "perclassrank":
        w = _check_weights(weights, n)
        queues = []
        for j in range(view.n_cols):
            rows = np.flatnonzero(view.cells[:, j])
            queues.append(list(rows[np.argsort(-w[rows], kind="stable")]))
        taken: set[int] = set()
        indices = []
        while len(indices) < budget:
            progressed = False
            for q in queues:
                while q and q[0] in taken:
                    q.pop(0)
                if q and len(indices) < budget:
                    i = int(q.pop(0))
                    taken.add(i)
                    indices.append(i)
                    progressed = True
            if not progressed:
                break
    elif method == "threshold":
        w = _check_weights(weights, n)
        indices = [int(i) for i in np.flatnonzero(w > threshold)[:budget]]
    else:
        raise ValidationError(f"unknown baseline {method!r}; expected one of {BASELINES}")
    report = {}
    if len(indices) < budget:
        report["shortfall"] = budget - len(indices)
    return _finalize(
        view.cells, indices, view.cocats.names,
        method=method, budget=budget, seed=seed, report=report,
    )


@dataclass(frozen=True, eq=False)
class DerivedView:
    """A column space built from a composition matrix for constrained modes.

    ``rows[i]`` is the parent matrix row behind derived row ``i``.
    """

    rows: np.ndarray
    cells: np.ndarray
    columns: CategorySet


def group_expanded_view(C: CompositionMatrix, group_a: str, group_b: str) -> DerivedView:
    """Rows with either group; columns ``y|a`` and ``y|b`` for every other category y."""
    if group_a == group_b:
        raise ValidationError("groups must differ")
    ja, jb = C.categories.index(group_a), C.categories.index(group_b)
    rows = np.flatnonzero((C.cells[:, ja] == 1) | (C.cells[:, jb] == 1))
    others = [j for j in range(len(C.categories)) if j not in (ja, jb)]
    sub = C.cells[rows].astype(np.int64)
    cols, names = [], []
    for j in others:
        y = C.categories.names[j]
        cols.append(sub[:, j] * sub[:, ja])
        cols.append(sub[:, j] * sub[:, jb])
        names += [f"{y}|{group_a}", f"{y}|{group_b}"]
    cells = np.stack(cols, axis=1) if cols else np.zeros((rows.size, 0), np.int64)
    return DerivedView(rows, cells.astype(np.uint8), CategorySet(tuple(names)))


def ratio_violations(C, indices, group_a, group_b, alpha):
    """Categories whose a/b co-occurrence ratio in ``indices`` leaves ``[1/alpha, alpha]``.

    Categories where one group never co-occurs in the whole matrix are exempt
    and returned separately. For the rest, a zero on exactly one side counts
    as a violation.
    """
    ja, jb = C.categories.index(group_a), C.categories.index(group_b)
    X = C.cells.astype(np.int64)
    pool_a, pool_b = X[:, ja] @ X, X[:, jb] @ X
    sel = X[list(indices)]
    sel_a, sel_b = sel[:, ja] @ sel, sel[:, jb] @ sel
    violations, exempt = [], []
    for j, y in enumerate(C.categories.names):
        if j in (ja, jb):
            continue
        if pool_a[j] == 0 or pool_b[j] == 0:
            if pool_a[j] or pool_b[j]:
                exempt.append(y)
            continue
        a, b = int(sel_a[j]), int(sel_b[j])
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0 or not (1 / alpha <= a / b <= alpha):
            violations.append({"category": y, group_a: a, group_b: b})
    return violations, exempt


def ratio_constrained_select(
    C: CompositionMatrix,
    group_a: str,
    group_b: str,
    alpha: float,
    budget: int | None = None,
    seed: int = 0,
) -> Selection:
    """Greedy cv selection on the group-expanded view, checked against a ratio band.

    The greedy order is run to ``budget`` (or the whole pool). The returned
    prefix is the longest one in which every non-exempt category satisfies
    ``1/alpha <= #(a,y) / #(b,y) <= alpha``. If no nonempty prefix satisfies
    the band, the prefix with the fewest violations is returned (ties: lower
    cv, then longer) together with its violation report.
    """
    if alpha < 1:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    dv = group_expanded_view(C, group_a, group_b)
    pool = dv.rows.size
    if pool == 0:
        raise ValidationError(f"no image contains {group_a!r} or {group_b!r}")
    limit = pool if budget is None else _check_budget(budget, pool)
    order = greedy_min_cv(dv.cells, limit)

    # incremental band check along the greedy order
    ja, jb = C.categories.index(group_a), C.categories.index(group_b)
    X = C.cells.astype(np.int64)
    pool_a, pool_b = X[:, ja] @ X, X[:, jb] @ X
    checked = np.array([
        j not in (ja, jb) and pool_a[j] > 0 and pool_b[j] > 0
        for j in range(len(C.categories))
    ])
    a = np.zeros(len(C.categories), np.int64)
    b = np.zeros(len(C.categories), np.int64)
    running = np.zeros(dv.cells.shape[1], np.int64)
    best_feasible = 0
    fallback = None  # (violations, cv, -length)
    for t, k in enumerate(order, start=1):
        row = X[dv.rows[k]]
        a += row * row[ja]
        b += row * row[jb]
        running += dv.cells[k]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        bad = checked & (hi > 0) & ((lo == 0) | (hi > alpha * lo))
        n_bad = int(bad.sum())
        if n_bad == 0:
            best_feasible = t
        key = (n_bad, coefficient_of_variation(running), -t)
        if fallback is None or key < fallback[0]:
            fallback = (key, t)
    length = best_feasible if best_feasible else fallback[1]
    chosen = order[:length]
    parent = [int(dv.rows[k]) for k in chosen]
    violations, exempt = ratio_violations(C, parent, group_a, group_b, alpha)
    sel = _finalize(
        dv.cells, chosen, dv.columns.names,
        method="ratio", budget=limit, seed=seed,
        violations=tuple(violations),
        report={
            "group_a": group_a, "group_b": group_b, "alpha": alpha,
            "exempt": exempt, "feasible": not violations,
            f"n_{group_a}": int(X[parent, ja].sum()) if parent else 0,
            f"n_{group_b}": int(X[parent, jb].sum()) if parent else 0,
        },
    )
    # indices refer to parent matrix rows in this mode
    return _replace_indices(sel, parent)


def _replace_indices(sel: Selection, indices) -> Selection:
    return replace(sel, indices=tuple(int(i) for i in indices))


def pair_expanded_view(C: CompositionMatrix, pairs: Sequence[tuple[str, str]]) -> DerivedView:
    """Rows with any biased category; an exclusive and a co-occurring column per pair."""
    if not pairs:
        raise ValidationError("at least one (biased, cooccur) pair is required")
    X = C.cells.astype(np.int64)
    cols, names = [], []
    for biased, co in pairs:
        jb, jc = C.categories.index(biased), C.categories.index(co)
        if jb == jc:
            raise ValidationError(f"pair ({biased!r}, {co!r}) repeats a category")
        cols.append(X[:, jb] * (1 - X[:, jc]))
        cols.append(X[:, jb] * X[:, jc])
        names += [f"{biased}/exclusive", f"{biased}+{co}"]
    full = np.stack(cols, axis=1)
    rows = np.flatnonzero(full.sum(axis=1) > 0)
    return DerivedView(rows, full[rows].astype(np.uint8), CategorySet(tuple(names)))


def pair_balance_select(
    C: CompositionMatrix, pairs: Sequence[tuple[str, str]], budget: int, seed: int = 0
) -> Selection:
    """Balance exclusive vs co-occurring images of each biased category.

    Greedy cv minimization over two columns per pair. Pairs with no
    exclusive (or no co-occurring) image in the pool are kept and flagged in
    ``report["warnings"]``.
    """
    dv = pair_expanded_view(C, pairs)
    budget = _check_budget(budget, dv.rows.size)
    warnings = []
    pool_counts = dv.cells.sum(axis=0)
    for p, (biased, co) in enumerate(pairs):
        if pool_counts[2 * p] == 0:
            warnings.append(f"pair ({biased}, {co}) has no exclusive images")
        if pool_counts[2 * p + 1] == 0:
            warnings.append(f"pair ({biased}, {co}) has no co-occurring images")
    order = greedy_min_cv(dv.cells, budget)
    counts = dv.cells[order].sum(axis=0, dtype=np.int64)
    per_pair = []
    for p, (biased, co) in enumerate(pairs):
        ex, both = int(counts[2 * p]), int(counts[2 * p + 1])
        per_pair.append({
            "biased": biased, "cooccur": co, "exclusive": ex, "cooccurring": both,
            "cv": coefficient_of_variation([ex, both]),
        })
    sel = _finalize(
        dv.cells, order, dv.columns.names,
        method="pair", budget=budget, seed=seed,
        report={"pairs": per_pair, "warnings": warnings},
    )
    return _replace_indices(sel, [int(dv.rows[k]) for k in order])
