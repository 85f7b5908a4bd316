"""Command line entry point: ``fairsubset <subcommand> ...``.

Exit status: 0 success, 1 validation or parse error, 2 infeasible request.
Diagnostics go to stderr; results go to ``--out`` (or stdout when no path
is given).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import formats
from .aloft import DetectorNoise, region_file_source, run_aloft
from .composition import cooccurrence_stats, protected_view
from .errors import InfeasibleError, ValidationError
from .inequality import coefficient_of_variation
from .metrics import (
    bias_amplification,
    equalized_odds_disparity,
    representational_bias,
)
from .selection import (
    BASELINES,
    ORACLE_CAP,
    baseline_select,
    brute_force_select,
    fair_select,
    group_expanded_view,
    pair_balance_select,
    pair_expanded_view,
    ratio_constrained_select,
)

BUDGET_MESSAGE = "budget fraction must be in (0,1] or integer count"


def parse_budget(text: str) -> int | float:
    """``"12"`` -> 12 images; ``"0.1"`` -> a fraction of the pool."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(BUDGET_MESSAGE) from None
    if not 0.0 < value <= 1.0 or math.isnan(value):
        raise ValidationError(BUDGET_MESSAGE)
    return value


def resolve_budget(budget: int | float, pool: int) -> int:
    if isinstance(budget, float):
        return max(1, math.floor(budget * pool))
    if budget <= 0:
        raise ValidationError(BUDGET_MESSAGE)
    if budget > pool:
        raise InfeasibleError(f"budget {budget} exceeds pool size {pool}")
    return budget


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 2 or not all(parts):
            raise ValidationError(f"pair {item!r} must look like 'biased:cooccur'")
        pairs.append((parts[0], parts[1]))
    return pairs


def _emit(text: str, out: str | None) -> None:
    if out:
        formats.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _weights_for(view, path):
    table = formats.read_weights_csv(path)
    missing = [i for i in view.image_ids if i not in table]
    if missing:
        raise ValidationError(f"{path}: no weight for image {missing[0]!r}")
    return np.array([table[i] for i in view.image_ids])


def revalidate_manifest(manifest: dict, C) -> float:
    """Recompute a manifest's cv from its image ids and the source matrix."""
    method = manifest["method"]
    params = manifest.get("params", {})
    row_of = {i: n for n, i in enumerate(C.image_ids)}
    try:
        parent = [row_of[i] for i in manifest["image_ids"]]
    except KeyError as e:
        raise ValidationError(f"manifest image {e.args[0]!r} not in matrix") from None
    if method == "ratio":
        dv = group_expanded_view(C, params["group_a"], params["group_b"])
    elif method == "pair":
        dv = pair_expanded_view(C, [tuple(p) for p in params["pairs"]])
    else:
        view = protected_view(C, params["protected"])
        local = {int(r): n for n, r in enumerate(view.parent_rows)}
        counts = view.cells[[local[r] for r in parent]].sum(axis=0, dtype=np.int64)
        return coefficient_of_variation(counts)
    local = {int(r): n for n, r in enumerate(dv.rows)}
    counts = dv.cells[[local[r] for r in parent]].sum(axis=0, dtype=np.int64)
    return coefficient_of_variation(counts)


# subcommands --------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.format == "coco_json":
        C, dropped = formats.read_coco_json(args.input)
        if dropped:
            print(f"dropped {dropped} images with no annotations", file=sys.stderr)
    else:
        C = formats.read_matrix_csv(args.input)
    _emit(formats.matrix_to_csv(C), args.out)
    return 0


def cmd_select(args) -> int:
    C = formats.read_matrix_csv(args.matrix)
    budget = parse_budget(args.budget) if args.budget is not None else None
    if args.method == "ratio":
        if not (args.group_a and args.group_b):
            raise ValidationError("ratio selection needs --group-a and --group-b")
        pool = group_expanded_view(C, args.group_a, args.group_b).rows.size
        b = None if budget is None else resolve_budget(budget, pool)
        sel = ratio_constrained_select(C, args.group_a, args.group_b, args.alpha, b, seed=args.seed)
        params = {"group_a": args.group_a, "group_b": args.group_b, "alpha": args.alpha}
        ids = C.image_ids
    elif args.method == "pair":
        if not args.pairs:
            raise ValidationError("pair selection needs --pairs biased:cooccur,...")
        if budget is None:
            raise ValidationError("pair selection needs --budget")
        pairs = parse_pairs(args.pairs)
        pool = pair_expanded_view(C, pairs).rows.size
        sel = pair_balance_select(C, pairs, resolve_budget(budget, pool), seed=args.seed)
        for w in sel.report.get("warnings", []):
            print(f"warning: {w}", file=sys.stderr)
        params = {"pairs": [list(p) for p in pairs]}
        ids = C.image_ids
    else:
        if not args.protected:
            raise ValidationError(f"{args.method} selection needs --protected")
        if budget is None:
            raise ValidationError("selection needs --budget")
        view = protected_view(C, args.protected)
        b = resolve_budget(budget, view.n_rows)
        if args.method == "fair":
            sel = fair_select(view, b, init=args.init, seed=args.seed)
        else:
            weights = _weights_for(view, args.weights) if args.weights else None
            sel = baseline_select(view, b, args.method, weights, seed=args.seed)
            if "shortfall" in sel.report:
                print(f"warning: selected {len(sel)} of budget {b}", file=sys.stderr)
        params = {"protected": args.protected}
        ids = view.image_ids
    formats.write_manifest(args.out, formats.manifest_from_selection(sel, ids, params))
    return 0


def cmd_oracle(args) -> int:
    C = formats.read_matrix_csv(args.matrix)
    view = protected_view(C, args.protected)
    b = resolve_budget(parse_budget(args.budget), view.n_rows)
    sel = brute_force_select(view, b, cap=args.cap, seed=args.seed)
    manifest = formats.manifest_from_selection(sel, view.image_ids, {"protected": args.protected})
    formats.write_manifest(args.out, manifest)
    return 0


def cmd_stats(args) -> int:
    C = formats.read_matrix_csv(args.matrix)
    attrs = [a for a in args.attributes.split(",") if a]
    table = cooccurrence_stats(C, attrs)
    rows = [["category", *attrs]]
    rows.append(["total", *map(int, table.totals)])
    for j, y in enumerate(C.categories):
        if y in attrs:
            continue
        rows.append([y, *(int(table.counts[a, j]) for a in range(len(attrs)))])
    _emit(formats._csv_text(rows), args.out)
    return 0


def cmd_metrics(args) -> int:
    rows = []
    if args.eod:
        eod, tpr = equalized_odds_disparity(formats.read_outcomes(args.eod))
        rows.append(("eod", "all", eod))
        rows += [("tpr", str(g), v) for g, v in tpr.items()]
    if args.bias_amp:
        gt = formats.read_label_vectors(args.bias_amp[0])
        pred = formats.read_label_vectors(args.bias_amp[1])
        rows.append(("bias_amplification", "all",
                     bias_amplification(gt, pred, threshold=args.threshold)))
    if args.rep_bias:
        rows.append(("representational_bias", "all",
                     representational_bias(formats.read_zy_csv(args.rep_bias))))
    if not rows:
        raise ValidationError("metrics needs one of --eod, --bias-amp, --rep-bias")
    _emit(formats.metric_rows(rows), args.out)
    return 0


def cmd_simulate_al(args) -> int:
    C = formats.read_matrix_csv(args.matrix)
    view = protected_view(C, args.protected)
    n = view.n_rows
    per_cycle = resolve_budget(parse_budget(args.budget), n)
    noise = DetectorNoise(args.miss, args.fp, args.temperature, args.regions_per_image, args.seed)
    source = None
    if args.regions:
        source = region_file_source(
            formats.read_region_matrices(args.regions), view.image_ids, view.n_cols
        )
    state = run_aloft(view, args.cycles, per_cycle, args.init_fraction, noise,
                      seed=args.seed, method=args.method, source=source)
    _emit(formats.trajectory_to_csv(state.trajectory, args.method, args.seed), args.out)
    return 0


def cmd_report(args) -> int:
    C = formats.read_matrix_csv(args.matrix)
    manifests = [formats.read_manifest(p) for p in args.manifest]
    columns: list[str] = []
    for m in manifests:
        for c in m["per_category_counts"]:
            if c not in columns:
                columns.append(c)
    rows = [["method", "size", *columns, "c_v"]]
    for m in manifests:
        cv = revalidate_manifest(m, C)
        if abs(cv - m["achieved_cv"]) > 1e-9:
            raise ValidationError(
                f"manifest {m['method']}: stored c_v {m['achieved_cv']} != recomputed {cv}"
            )
        size = len(m["image_ids"])
        counts = m["per_category_counts"]
        if args.fractions:
            cells = [f"{counts.get(c, 0) / size:.4f}" if size else "0" for c in columns]
        else:
            cells = [counts.get(c, 0) for c in columns]
        rows.append([m["method"], size, *cells, f"{cv:.6f}"])
    _emit(formats._csv_text(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairsubset", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="convert annotations to a matrix CSV")
    s.add_argument("input")
    s.add_argument("--format", choices=("coco_json", "csv"), required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("select", help="select a subset and write a manifest")
    s.add_argument("--matrix", required=True)
    s.add_argument("--protected")
    s.add_argument("--method", default="fair", choices=("fair", *BASELINES, "ratio", "pair"))
    s.add_argument("--budget")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init", choices=("empty", "cover"), default="empty")
    s.add_argument("--weights")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--group-a")
    s.add_argument("--group-b")
    s.add_argument("--pairs")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("oracle", help="exact minimum-cv subset by enumeration")
    s.add_argument("--matrix", required=True)
    s.add_argument("--protected", required=True)
    s.add_argument("--budget", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=int, default=ORACLE_CAP)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("stats", help="co-occurrence counts of attribute categories")
    s.add_argument("--matrix", required=True)
    s.add_argument("--attributes", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("metrics", help="fairness metrics as metric,scope,value rows")
    s.add_argument("--eod", metavar="RECORDS_JSONL")
    s.add_argument("--bias-amp", nargs=2, metavar=("GT_JSONL", "PRED_JSONL"))
    s.add_argument("--rep-bias", metavar="ZY_CSV")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("simulate-al", help="run the ALOFT loop and write its trajectory")
    s.add_argument("--matrix", required=True)
    s.add_argument("--protected", required=True)
    s.add_argument("--cycles", type=int, required=True)
    s.add_argument("--budget", required=True)
    s.add_argument("--init-fraction", type=float, default=0.1)
    s.add_argument("--miss", type=float, default=0.0)
    s.add_argument("--fp", type=float, default=0.0)
    s.add_argument("--temperature", type=float, default=1.0)
    s.add_argument("--regions-per-image", type=int, default=4)
    s.add_argument("--regions", help="region matrix file replacing the simulated detector")
    s.add_argument("--method", choices=("aloft", "random"), default="aloft")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate_al)

    s = sub.add_parser("report", help="per-category count and c_v table of manifests")
    s.add_argument("--manifest", action="append", required=True)
    s.add_argument("--matrix", required=True)
    s.add_argument("--fractions", action="store_true",
                   help="print count / selection size instead of raw counts")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors exit 2; those are validation failures here
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except InfeasibleError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValidationError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
