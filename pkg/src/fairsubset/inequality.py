"""Inequality of per-category counts.

The coefficient of variation uses the population standard deviation, which
is what makes ``GEI(2) == cv**2 / 2`` hold exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty count vector")
    if np.isnan(x).any():
        raise ValidationError("count vector contains NaN")
    if (x < 0).any():
        raise ValidationError("negative entry in count vector")
    return x


def coefficient_of_variation(counts) -> float:
    """sigma / mu of ``counts``; 0 for the all-zero vector."""
    x = _vector(counts)
    mu = x.mean()
    if mu == 0:
        return 0.0
    return float(np.sqrt(np.mean((x - mu) ** 2)) / mu)


def generalized_entropy_index(counts, alpha: float) -> float:
    """Generalized Entropy Index of ``counts`` with sensitivity ``alpha``.

    alpha=0 is the mean log deviation, alpha=1 the Theil index and alpha=2
    half the squared coefficient of variation. The element count is the
    vector length in every branch.
    """
    x = _vector(counts)
    alpha = float(alpha)
    if alpha <= 1 and (x == 0).any():
        raise ValidationError("log of zero count: GEI with alpha <= 1 needs positive counts")
    mu = x.mean()
    if mu == 0:
        raise ValidationError("GEI undefined for the all-zero vector")
    if alpha == 2:
        return 0.5 * coefficient_of_variation(x) ** 2
    r = x / mu
    if alpha == 1:
        return float(max(np.mean(r * np.log(r)), 0.0))
    if alpha == 0:
        return float(max(-np.mean(np.log(r)), 0.0))
    with np.errstate(divide="ignore"):
        # expm1 keeps r**alpha - 1 accurate for alpha near 0
        terms = np.where(r > 0, np.expm1(alpha * np.log(np.where(r > 0, r, 1.0))), -1.0)
    value = terms.mean() / (alpha * (alpha - 1))
    return float(max(value, 0.0))


def quadratic_objective(sel, view) -> float:
    """Selection objective ``L * s'Cbar s / (s'C 1)**2`` in matrix form.

    ``Cbar = C M M' C'`` with ``M = I - 11'/L`` the centering matrix over the
    ``L`` co-occurring categories. Equals the squared coefficient of
    variation of the selection's counts.
    """
    indices = np.asarray(list(getattr(sel, "indices", sel)), dtype=np.int64)
    if indices.size == 0:
        raise ValidationError("empty selection")
    C = np.asarray(view.cells, dtype=float)
    n, L = C.shape
    if indices.min() < 0 or indices.max() >= n:
        raise ValidationError("selection index out of range")
    s = np.zeros(n)
    s[indices] = 1.0
    denom = (s @ C @ np.ones(L)) ** 2
    if denom == 0:
        raise ValidationError("objective undefined: selected counts are all zero")
    M = np.eye(L) - np.ones((L, L)) / L
    Cbar = C @ M @ M.T @ C.T
    return float(L * (s @ Cbar @ s) / denom)
