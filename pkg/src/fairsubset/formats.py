"""Readers and writers for every file the tool consumes or produces.

All text is UTF-8 with LF line endings. Writers go through a temp file and
``os.replace`` so a crashed run never leaves a half-written output.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .composition import CategorySet, CompositionMatrix
from .errors import ValidationError
from .metrics import LabelVectorRecord, OutcomeRecord


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file") from None
    except UnicodeDecodeError as e:
        raise ValidationError(f"{path}: not UTF-8 ({e})") from None


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


# composition matrix -------------------------------------------------------

def matrix_to_csv(C: CompositionMatrix) -> str:
    rows = [["image_id", *C.categories.names]]
    rows += [[i, *map(int, r)] for i, r in zip(C.image_ids, C.cells)]
    return _csv_text(rows)


def write_matrix_csv(path, C: CompositionMatrix) -> None:
    atomic_write(path, matrix_to_csv(C))


def parse_matrix_csv(text: str, source: str = "<matrix>") -> CompositionMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError(f"{source}: empty file") from None
    if not header or header[0] != "image_id":
        raise ValidationError(f"{source}:1: header must start with 'image_id'")
    try:
        cats = CategorySet(tuple(header[1:]))
    except ValidationError as e:
        raise ValidationError(f"{source}:1: {e}") from None
    ids, rows = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(
                f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        bad = [c for c in row[1:] if c not in ("0", "1")]
        if bad:
            raise ValidationError(f"{source}:{lineno}: cell {bad[0]!r} is not 0 or 1")
        ids.append(row[0])
        rows.append([int(c) for c in row[1:]])
    cells = np.array(rows, dtype=np.uint8).reshape(len(rows), len(cats))
    try:
        return CompositionMatrix(tuple(ids), cats, cells)
    except ValidationError as e:
        raise ValidationError(f"{source}: {e}") from None


def read_matrix_csv(path) -> CompositionMatrix:
    return parse_matrix_csv(_read_text(path), str(path))


def coco_to_matrix(doc: dict, source: str = "<coco>") -> tuple[CompositionMatrix, int]:
    """COCO-style annotation document to a matrix; returns it and the number of dropped images.

    Columns follow ascending category id. Images with no annotation are dropped.
    """
    for key in ("images", "annotations", "categories"):
        if not isinstance(doc.get(key), list):
            raise ValidationError(f"{source}: missing list field {key!r}")
    cat_names: dict = {}
    for n, c in enumerate(doc["categories"]):
        if "id" not in c or "name" not in c:
            raise ValidationError(f"{source}: categories[{n}] needs 'id' and 'name'")
        cat_names[c["id"]] = str(c["name"])
    image_order = []
    for n, im in enumerate(doc["images"]):
        if "id" not in im:
            raise ValidationError(f"{source}: images[{n}] has no 'id'")
        image_order.append(im["id"])
    known = set(image_order)
    present: dict = {i: set() for i in image_order}
    for n, ann in enumerate(doc["annotations"]):
        for key in ("image_id", "category_id"):
            if key not in ann:
                raise ValidationError(f"{source}: annotations[{n}] has no {key!r}")
        if ann["image_id"] not in known:
            raise ValidationError(
                f"{source}: annotations[{n}] references missing image id {ann['image_id']!r}"
            )
        if ann["category_id"] not in cat_names:
            raise ValidationError(
                f"{source}: annotations[{n}] references unknown category id {ann['category_id']!r}"
            )
        present[ann["image_id"]].add(ann["category_id"])
    cat_ids = sorted(cat_names)
    cats = CategorySet(tuple(cat_names[c] for c in cat_ids))
    col = {c: j for j, c in enumerate(cat_ids)}
    ids, rows, dropped = [], [], 0
    for i in image_order:
        if not present[i]:
            dropped += 1
            continue
        row = np.zeros(len(cats), np.uint8)
        row[[col[c] for c in present[i]]] = 1
        ids.append(str(i))
        rows.append(row)
    cells = np.vstack(rows) if rows else np.zeros((0, len(cats)), np.uint8)
    return CompositionMatrix(tuple(ids), cats, cells), dropped


def read_coco_json(path) -> tuple[CompositionMatrix, int]:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be an object")
    return coco_to_matrix(doc, str(path))


# manifests ----------------------------------------------------------------

def manifest_from_selection(sel, image_ids, params: dict | None = None, created_at=None) -> dict:
    """Manifest document for a selection; ``image_ids`` maps its indices to ids."""
    if created_at is None:
        created_at = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    return {
        "method": sel.method,
        "budget": sel.budget,
        "seed": sel.seed,
        "init": sel.init,
        "image_ids": [image_ids[i] for i in sel.indices],
        "achieved_cv": sel.achieved_cv,
        "per_category_counts": dict(zip(sel.columns, sel.counts)),
        "violations": list(sel.violations),
        "params": params or {},
        "report": sel.report,
        "tool_version": __version__,
        "created_at": created_at,
    }


def manifest_to_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, ensure_ascii=False) + "\n"


def write_manifest(path, manifest: dict) -> None:
    atomic_write(path, manifest_to_json(manifest))


MANIFEST_KEYS = ("method", "budget", "seed", "init", "image_ids", "achieved_cv",
                 "per_category_counts", "violations", "tool_version", "created_at")


def read_manifest(path) -> dict:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    missing = [k for k in MANIFEST_KEYS if k not in doc]
    if missing:
        raise ValidationError(f"{path}: manifest missing fields {missing}")
    return doc


# record streams -----------------------------------------------------------

def _jsonl(path):
    for lineno, line in enumerate(_read_text(path).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}:{lineno}: invalid JSON: {e.msg}") from None
        if not isinstance(obj, dict):
            raise ValidationError(f"{path}:{lineno}: record must be an object")
        yield lineno, obj


def _field(obj, key, path, lineno):
    if key not in obj:
        raise ValidationError(f"{path}:{lineno}: missing field {key!r}")
    return obj[key]


def read_outcomes(path) -> list[OutcomeRecord]:
    out = []
    for lineno, obj in _jsonl(path):
        try:
            out.append(OutcomeRecord(
                image_id=str(_field(obj, "image_id", path, lineno)),
                y_true=int(_field(obj, "y_true", path, lineno)),
                y_pred=int(_field(obj, "y_pred", path, lineno)),
                groups=frozenset(_field(obj, "groups", path, lineno)),
                score=None if obj.get("score") is None else float(obj["score"]),
            ))
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{path}:{lineno}: {e}") from None
    return out


def outcomes_to_jsonl(records) -> str:
    lines = []
    for r in records:
        obj = {"image_id": r.image_id, "y_true": r.y_true, "y_pred": r.y_pred}
        if r.score is not None:
            obj["score"] = r.score
        obj["groups"] = sorted(r.groups, key=str)
        lines.append(json.dumps(obj, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def read_label_vectors(path) -> list[LabelVectorRecord]:
    out = []
    for lineno, obj in _jsonl(path):
        labels = _field(obj, "labels", path, lineno)
        if not isinstance(labels, list):
            raise ValidationError(f"{path}:{lineno}: 'labels' must be a list")
        try:
            out.append(LabelVectorRecord(
                image_id=str(_field(obj, "image_id", path, lineno)),
                labels=tuple(labels),
                attribute=int(_field(obj, "attribute", path, lineno)),
            ))
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{path}:{lineno}: {e}") from None
    return out


def label_vectors_to_jsonl(records) -> str:
    return "".join(
        json.dumps({"image_id": r.image_id, "labels": list(r.labels), "attribute": r.attribute}) + "\n"
        for r in records
    )


# region matrices ----------------------------------------------------------

def read_region_matrices(path) -> dict[str, np.ndarray]:
    """Blocks of ``image_id,n_r`` followed by ``n_r`` probability rows."""
    rows = [r for r in csv.reader(io.StringIO(_read_text(path)))]
    out: dict[str, np.ndarray] = {}
    i = 0
    while i < len(rows):
        head = rows[i]
        if not head:
            i += 1
            continue
        if len(head) != 2:
            raise ValidationError(f"{path}:{i + 1}: block header must be 'image_id,n_r'")
        image_id = head[0]
        try:
            n_r = int(head[1])
        except ValueError:
            raise ValidationError(f"{path}:{i + 1}: n_r {head[1]!r} is not an integer") from None
        if n_r < 1 or i + 1 + n_r > len(rows):
            raise ValidationError(f"{path}:{i + 1}: bad region count {n_r} for {image_id!r}")
        try:
            block = np.array([[float(v) for v in r] for r in rows[i + 1:i + 1 + n_r]])
        except ValueError as e:
            raise ValidationError(f"{path}:{i + 2}: {e}") from None
        if image_id in out:
            raise ValidationError(f"{path}:{i + 1}: duplicate image id {image_id!r}")
        out[image_id] = block
        i += 1 + n_r
    return out


def region_matrices_to_csv(blocks: dict) -> str:
    rows = []
    for image_id, P in blocks.items():
        P = np.asarray(P)
        rows.append([image_id, P.shape[0]])
        rows += [[repr(float(v)) for v in r] for r in P]
    return _csv_text(rows)


# tables -------------------------------------------------------------------

def trajectory_to_csv(trajectory, method: str, seed: int) -> str:
    rows = [["cycle", "budget_spent", "labeled_cv", "method", "seed"]]
    rows += [[c, b, repr(float(v)), method, seed] for c, b, v in trajectory]
    return _csv_text(rows)


def read_trajectory_csv(path) -> list[dict]:
    reader = csv.DictReader(io.StringIO(_read_text(path)))
    return [
        {"cycle": int(r["cycle"]), "budget_spent": int(r["budget_spent"]),
         "labeled_cv": float(r["labeled_cv"]), "method": r["method"], "seed": int(r["seed"])}
        for r in reader
    ]


def read_weights_csv(path) -> dict[str, float]:
    reader = csv.reader(io.StringIO(_read_text(path)))
    header = next(reader, None)
    if header != ["image_id", "weight"]:
        raise ValidationError(f"{path}:1: header must be 'image_id,weight'")
    out = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 fields")
        try:
            out[row[0]] = float(row[1])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: weight {row[1]!r} is not a number") from None
    return out


def read_zy_csv(path) -> list[tuple[str, str]]:
    reader = csv.reader(io.StringIO(_read_text(path)))
    header = next(reader, None)
    if header != ["z", "y"]:
        raise ValidationError(f"{path}:1: header must be 'z,y'")
    pairs = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 fields")
        pairs.append((row[0], row[1]))
    return pairs


def metric_rows(rows) -> str:
    """``metric,scope,value`` report text."""
    return _csv_text([["metric", "scope", "value"], *[[m, s, repr(float(v))] for m, s, v in rows]])
