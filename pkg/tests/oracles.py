"""Reference implementations the package is checked against.

Deliberately slow and literal: exact rationals, full enumeration, no
running sums.
"""

import itertools
import math
import statistics
from fractions import Fraction

import numpy as np


def exact_cv(v):
    """Population sigma / mu via exact rationals; 0 for the zero vector."""
    xs = [Fraction(int(x)) if float(x).is_integer() else Fraction(x) for x in v]
    mu = statistics.mean(xs)
    if mu == 0:
        return 0.0
    return math.sqrt(statistics.pvariance(xs)) / float(mu)


def literal_fair_selection(cells, budget, start=()):
    """Greedy that recomputes the cv of S + {y} from scratch for every y."""
    cells = np.asarray(cells)
    S = list(start)
    remaining = [i for i in range(len(cells)) if i not in S]
    while len(S) < budget:
        best, k = math.inf, None
        for y in remaining:
            r = exact_cv(cells[S + [y]].sum(axis=0))
            if r < best - 1e-12:
                best, k = r, y
        S.append(k)
        remaining.remove(k)
    return S


def enumerate_min_cv(cells, budget):
    """Exact cv of every subset of size ``budget``; lexicographic tie-break."""
    cells = np.asarray(cells)
    best, arg = math.inf, None
    for combo in itertools.combinations(range(len(cells)), budget):
        r = exact_cv(cells[list(combo)].sum(axis=0))
        if r < best - 1e-12:
            best, arg = r, combo
    return best, list(arg)
