"""Synthetic multi-label pools with a prescribed co-occurrence profile."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .composition import CategorySet, CompositionMatrix

# fraction of 'cup' training images containing each co-occurring category (COCO 2017)
CUP_PROFILE: dict[str, float] = {
    "person": 0.57,
    "dining table": 0.55,
    "bottle": 0.35,
    "chair": 0.34,
    "bowl": 0.33,
    "knife": 0.23,
    "fork": 0.22,
    "spoon": 0.22,
    "wine glass": 0.13,
    "sink": 0.13,
}


def skewed_pool(
    n_images: int,
    profile: Mapping[str, float] | Sequence[float] = CUP_PROFILE,
    protected: str = "cup",
    seed: int = 0,
) -> CompositionMatrix:
    """Every image contains ``protected``; category j appears independently with ``profile[j]``."""
    if isinstance(profile, Mapping):
        names, freqs = list(profile), np.array(list(profile.values()), dtype=float)
    else:
        freqs = np.asarray(profile, dtype=float)
        names = [f"c{j}" for j in range(freqs.size)]
    rng = np.random.default_rng(seed)
    co = (rng.random((n_images, freqs.size)) < freqs).astype(np.uint8)
    cells = np.hstack([np.ones((n_images, 1), np.uint8), co])
    ids = tuple(f"img{i:06d}" for i in range(n_images))
    return CompositionMatrix(ids, CategorySet((protected, *names)), cells)


def random_view_cells(rng, n_rows: int, n_cols: int, density: float = 0.35) -> np.ndarray:
    return (rng.random((n_rows, n_cols)) < density).astype(np.uint8)


def planted_one_hot(per_category: Sequence[int], seed: int = 0) -> np.ndarray:
    """One-hot rows, ``per_category[j]`` of them for column j, shuffled."""
    rng = np.random.default_rng(seed)
    k = len(per_category)
    rows = np.vstack([np.eye(k, dtype=np.uint8)[[j] * c] for j, c in enumerate(per_category) if c])
    return rows[rng.permutation(rows.shape[0])]
