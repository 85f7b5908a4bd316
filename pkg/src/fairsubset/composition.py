"""Binary image-by-category composition matrices and their protected slices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class CategorySet:
    """Ordered, duplicate-free category names; position is the column index."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        seen = set()
        for n in names:
            if n in seen:
                raise ValidationError(f"duplicate category name {n!r}")
            seen.add(n)
        object.__setattr__(self, "_lookup", {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._lookup

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise ValidationError(f"unknown category {name!r}") from None

    def without(self, name: str) -> "CategorySet":
        self.index(name)
        return CategorySet(tuple(n for n in self.names if n != name))


@dataclass(frozen=True, eq=False)
class CompositionMatrix:
    """N x K binary incidence of images (rows) and categories (columns).

    Every row must contain at least one category. A matrix with zero rows is
    allowed; it can come out of filtering.
    """

    image_ids: tuple[str, ...]
    categories: CategorySet
    cells: np.ndarray

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.image_ids)
        object.__setattr__(self, "image_ids", ids)
        cells = np.asarray(self.cells)
        if cells.ndim != 2 or cells.shape != (len(ids), len(self.categories)):
            raise ValidationError(
                f"cells shape {cells.shape} does not match "
                f"{len(ids)} images x {len(self.categories)} categories"
            )
        if not np.isin(cells, (0, 1)).all():
            raise ValidationError("composition cells must be 0 or 1")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate image id")
        empty = np.flatnonzero(cells.sum(axis=1) == 0)
        if empty.size:
            raise ValidationError(
                f"empty category list for image {ids[empty[0]]!r}"
            )
        cells = cells.astype(np.uint8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def column(self, name: str) -> np.ndarray:
        return self.cells[:, self.categories.index(name)]

    def row_categories(self, i: int) -> list[str]:
        return [self.categories.names[j] for j in np.flatnonzero(self.cells[i])]


@dataclass(frozen=True, eq=False)
class ProtectedView:
    """Rows of a composition matrix that contain ``protected``, minus that column.

    ``parent_rows[i]`` is the row of the parent matrix behind view row ``i``.
    Rows whose only category is the protected one stay in as all-zero rows.
    """

    protected: str
    parent_rows: np.ndarray
    cells: np.ndarray
    cocats: CategorySet
    image_ids: tuple[str, ...] = field(default=())

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]


def build_composition(
    records: Iterable[tuple[str, Sequence[str]]],
    categories: CategorySet | Sequence[str],
) -> CompositionMatrix:
    """Build the incidence matrix from ``(image_id, [category, ...])`` records.

    Repeated categories within one record collapse to a single 1.
    """
    if not isinstance(categories, CategorySet):
        categories = CategorySet(tuple(categories))
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    for image_id, cats in records:
        image_id = str(image_id)
        if image_id in seen:
            raise ValidationError(f"duplicate image id {image_id!r}")
        seen.add(image_id)
        if len(cats) == 0:
            raise ValidationError(f"empty category list for image {image_id!r}")
        row = np.zeros(len(categories), dtype=np.uint8)
        for c in cats:
            if c not in categories:
                raise ValidationError(
                    f"unknown category {c!r} in image {image_id!r}"
                )
            row[categories.index(c)] = 1
        ids.append(image_id)
        rows.append(row)
    cells = np.vstack(rows) if rows else np.zeros((0, len(categories)), np.uint8)
    return CompositionMatrix(tuple(ids), categories, cells)


def protected_view(C: CompositionMatrix, protected: str) -> ProtectedView:
    j = C.categories.index(protected)
    rows = np.flatnonzero(C.cells[:, j] == 1)
    if rows.size == 0:
        raise ValidationError(f"empty protected view: no image contains {protected!r}")
    keep = [k for k in range(len(C.categories)) if k != j]
    cells = C.cells[np.ix_(rows, keep)].copy()
    cells.setflags(write=False)
    rows.setflags(write=False)
    return ProtectedView(
        protected=protected,
        parent_rows=rows,
        cells=cells,
        cocats=C.categories.without(protected),
        image_ids=tuple(C.image_ids[r] for r in rows),
    )


def _as_indices(sel) -> np.ndarray:
    indices = getattr(sel, "indices", sel)
    return np.asarray(list(indices), dtype=np.int64)


def selection_counts(view: ProtectedView, sel) -> np.ndarray:
    """Per co-occurring category image counts of a selection (``s^T C_pi``).

    ``sel`` is a :class:`~fairsubset.selection.Selection` or any iterable of
    view row indices.
    """
    idx = _as_indices(sel)
    if idx.size and (idx.min() < 0 or idx.max() >= view.n_rows):
        bad = idx[(idx < 0) | (idx >= view.n_rows)][0]
        raise ValidationError(f"row index {bad} out of range for {view.n_rows} rows")
    return view.cells[idx].sum(axis=0, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CooccurrenceTable:
    """Co-occurrence counts of a few attribute categories with every category.

    ``counts[a, y]`` is the number of images containing both attribute ``a``
    and category ``y``; ``totals[a]`` is the marginal count of ``a``.
    """

    attributes: tuple[str, ...]
    categories: CategorySet
    counts: np.ndarray
    totals: np.ndarray

    def pair(self, attribute: str, category: str) -> int:
        a = self.attributes.index(attribute)
        return int(self.counts[a, self.categories.index(category)])

    def as_dict(self) -> dict[str, dict[str, int]]:
        out = {}
        for a, name in enumerate(self.attributes):
            out[name] = {
                y: int(self.counts[a, j])
                for j, y in enumerate(self.categories)
                if y != name
            }
        return out


def cooccurrence_stats(C: CompositionMatrix, attributes: Sequence[str]) -> CooccurrenceTable:
    cols = [C.categories.index(a) for a in attributes]
    A = C.cells[:, cols].astype(np.int64)
    counts = A.T @ C.cells.astype(np.int64)
    return CooccurrenceTable(
        attributes=tuple(attributes),
        categories=C.categories,
        counts=counts,
        totals=A.sum(axis=0),
    )
