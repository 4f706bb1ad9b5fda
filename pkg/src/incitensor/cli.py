"""Command-line interface.

Tensor signatures are comma-separated dimensions with an optional
constraint suffix::

    node,node                 node-node matrix
    node^3                    node-node-node tensor
    1,2|c:1=2:1               node-edge with position (1,1) equal to (2,1)
    2d,3                      directed edge, undirected triangle

A dimension is ``node``/``edge``/``triangle``/``tet`` or a face size, with a
trailing ``d`` for directed faces and ``^k`` for repetition. Constraint
groups follow ``|c:`` separated by ``;``; each group joins positions
``d:i`` (``d`` alone means ``d:1``) with ``=``.

Exit codes: 0 success, 1 verification or input failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys

import numpy as np

from . import algebra, geometry, oracle, verify
from .equimap import (
    AGGREGATORS,
    EquivariantMap,
    Signature,
    apply_layer,
    input_sparsity_mask,
    load_layer,
    parameter_breakdown,
    total_parameters,
)
from .errors import IncitensorError
from .tensors import (
    ConstraintSet,
    Dim,
    IncidenceTensor,
    enumerate_valid_partitions,
    load_tensor,
    multiplicities,
    tensor_to_json,
)

NAMED_SIZES = {"node": 1, "edge": 2, "triangle": 3, "tri": 3, "tet": 4, "tetrahedron": 4}


class SignatureError(ValueError):
    pass


def parse_signature(text: str) -> tuple[tuple[Dim, ...], ConstraintSet]:
    body, _, tail = text.partition("|")
    dims = []
    for token in body.split(","):
        token = token.strip().lower()
        found = re.fullmatch(r"([a-z]+|\d+)(d?)(?:\^(\d+))?", token)
        if not found:
            raise SignatureError(f"cannot parse dimension {token!r}")
        name, directed, repeat = found.groups()
        size = NAMED_SIZES.get(name) if not name.isdigit() else int(name)
        if size is None or size < 1:
            raise SignatureError(f"unknown dimension {name!r}")
        if repeat is not None and int(repeat) < 1:
            raise SignatureError(f"repetition must be positive in {token!r}")
        dims.extend([Dim(size, bool(directed))] * int(repeat or 1))
    groups = []
    if tail:
        if not tail.startswith("c:"):
            raise SignatureError(f"constraint suffix must start with 'c:', got {tail!r}")
        for group in tail[2:].split(";"):
            positions = []
            for pos in group.split("="):
                d, _, i = pos.strip().partition(":")
                if not d.isdigit() or (i and not i.isdigit()):
                    raise SignatureError(f"bad position {pos!r}")
                positions.append((int(d), int(i or 1)))
            groups.append(tuple(positions))
    try:
        constraints = ConstraintSet(tuple(groups))
        constraints.validate(tuple(dims))
    except IncitensorError as exc:
        raise SignatureError(str(exc)) from exc
    return tuple(dims), constraints


def _signature_arg(text: str):
    try:
        return parse_signature(text)
    except SignatureError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
    elif fmt == "csv":
        if rows:
            writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    else:
        if rows:
            cols = list(rows[0])
            width = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
            out.write("  ".join(c.rjust(width[c]) for c in cols) + "\n")
            for r in rows:
                out.write("  ".join(str(r[c]).rjust(width[c]) for c in cols) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_count(args, out) -> int:
    in_dims, in_cons = args.in_signature
    if args.relaxed:
        total = 2 ** len(in_dims) * args.in_channels * args.out_channels
        if args.format == "json":
            json.dump({"relaxed": True, "order": len(in_dims), "total": total}, out)
            out.write("\n")
        else:
            out.write(f"relaxed parameters: {total}\n")
        return 0
    out_dims, out_cons = args.out_signature or args.in_signature
    sin = Signature.from_dims(in_dims, in_cons, args.in_channels)
    sout = Signature.from_dims(out_dims, out_cons, args.out_channels)
    rows = parameter_breakdown(sin, sout, args.symmetric)
    total = total_parameters(sin, sout, args.symmetric)
    if args.format == "json":
        json.dump({"rows": rows, "channels": [sin.channels, sout.channels], "total": total}, out, indent=2)
        out.write("\n")
        return 0
    _emit(rows, args.format, out)
    if args.format == "text":
        terms = " + ".join(str(r["subtotal"]) for r in rows)
        scale = sin.channels * sout.channels
        suffix = f" (x {scale} channel pairs)" if scale > 1 else ""
        out.write(f"total: {total} = {terms}{suffix}\n")
    return 0


def cmd_orbits(args, out) -> int:
    dims, cons = args.signature
    parts = enumerate_valid_partitions(dims, cons)
    kappa = multiplicities(dims, cons)
    if args.format == "json":
        json.dump({"partitions": [[list(map(list, b)) for b in p] for p in parts],
                   "kappa": {str(m): c for m, c in kappa.items()}}, out, indent=2)
        out.write("\n")
        return 0
    for p in parts:
        blocks = " ".join("{" + ",".join(f"{d}:{i}" for d, i in b) + "}" for b in p)
        out.write(f"m={len(p)}  {blocks}\n")
    out.write("kappa: " + " ".join(f"m={m}:{c}" for m, c in kappa.items()) + "\n")
    out.write(f"orbits: {len(parts)}\n")
    return 0


def _dump(data, path, out) -> None:
    text = json.dumps(data, indent=1) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def cmd_apply(args, out) -> int:
    layer = load_layer(args.layer)
    x = load_tensor(args.input)
    out_dims = out_cons = None
    if args.out_signature:
        out_dims, out_cons = args.out_signature
    mask = None
    if args.mask == "input":
        mask = input_sparsity_mask(x)
    elif args.mask != "none":
        mask = input_sparsity_mask(load_tensor(args.mask))
    y = apply_layer(layer, x, out_dims, out_cons, agg=args.agg, mask=mask)
    _dump(tensor_to_json(y), args.output, out)
    return 0


def cmd_init_layer(args, out) -> int:
    in_dims, in_cons = args.in_signature
    out_dims, out_cons = args.out_signature or args.in_signature
    sin = Signature.from_dims(in_dims, in_cons, args.in_channels)
    sout = Signature.from_dims(out_dims, out_cons, args.out_channels)
    if args.init == "identity":
        if sin != sout:
            raise IncitensorError("identity init needs equal input and output signatures")
        layer = EquivariantMap.identity(sin)
    elif args.init == "zeros":
        layer = EquivariantMap.zeros(sin, sout)
    else:
        if args.seed is None:
            raise IncitensorError("random init needs --seed")
        layer = EquivariantMap.random(sin, sout, args.seed, integer=args.integer)
    _dump(layer.to_json(), args.output, out)
    return 0


def cmd_random_tensor(args, out) -> int:
    dims, cons = args.signature
    t = IncidenceTensor.random(args.n, dims, cons, args.channels, args.seed, integer=args.integer)
    _dump(tensor_to_json(t), args.output, out)
    return 0


def cmd_verify(args, out) -> int:
    report = verify.run(args.max_n, args.max_m, args.seed, args.repeats)
    json.dump(report, out, indent=2)
    out.write("\n")
    for case in report["cases"]:
        if case["status"] == "fail":
            print(f"FAILED: {json.dumps(case)}", file=sys.stderr)
    return 0 if report["passed"] else 1


SYMBOLS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"


def cmd_sharing(args, out) -> int:
    grid, orbits = oracle.sharing_grid(args.m, args.m_prime, args.n)
    if args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerows(grid.tolist())
    elif args.format == "json":
        json.dump({"grid": grid.tolist(), "symbols": len(orbits),
                   "orbits": [list(map(list, o.pattern.matching)) for o in orbits]}, out)
        out.write("\n")
    else:
        for row in grid:
            out.write("".join(SYMBOLS[v] if v < len(SYMBOLS) else "?" for v in row) + "\n")
        out.write(f"symbols: {len(orbits)}\n")
    return 0


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from exc
    return a, b


def _export_mask(mask: np.ndarray, path) -> None:
    np.savetxt(path, mask.astype(int), delimiter=",", fmt="%d")


def cmd_complex(args, out) -> int:
    c = geometry.complex_from_json(geometry.load_json(args.facets))
    names = {1: "nodes", 2: "edges", 3: "triangles", 4: "tetrahedra"}
    counts = c.counts
    out.write(", ".join(f"{k} {names.get(m, f'faces of size {m}')}" for m, k in counts.items()) + "\n")
    if args.incidence:
        _, mask = geometry.incidence_from_complex(c, *args.incidence)
        out.write(f"incidence {args.incidence[0]}x{args.incidence[1]}: {int(mask.sum())} ones\n")
        if args.export:
            _export_mask(mask, args.export)
    return 0


def cmd_poset(args, out) -> int:
    p = geometry.poset_from_json(geometry.load_json(args.poset))
    report = geometry.validate_poset(p)
    out.write(("valid" if report.valid else "invalid") + "\n")
    out.write("rank sizes: " + "/".join(str(v) for v in report.rank_sizes.values()) + "\n")
    for v in report.violations:
        out.write(f"  {v}\n")
    if args.ranks and report.valid:
        _, mask = geometry.incidence_from_poset(p, *args.ranks)
        out.write(f"incidence ranks {args.ranks[0]}x{args.ranks[1]}: {int(mask.sum())} ones\n")
        if args.export:
            _export_mask(mask, args.export)
    return 0 if report.valid else 1


def cmd_algebra(args, out) -> int:
    if args.export:
        op = algebra.LOperator(*(int(v) for v in args.export[0].split(",")))
        algebra.build_L(op, args.n).to_csv(args.export[1])
    worst = max(algebra.compose_check(a, b, args.n).residual for a, b in algebra.legal_compositions())
    wx, wy, wy2 = algebra.two_layer_span_check(args.n)
    json.dump({"N": args.n, "max_composition_residual": worst,
               "span_full": wx, "span_relaxed": wy, "span_relaxed_twice": wy2}, out, indent=2)
    out.write("\n")
    return 0 if worst < 1e-9 and wy < wx == wy2 else 1


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incitensor", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="parameter counts of an equivariant layer")
    p.add_argument("--in-signature", type=_signature_arg, required=True)
    p.add_argument("--out-signature", type=_signature_arg)
    p.add_argument("--in-channels", type=int, default=1)
    p.add_argument("--out-channels", type=int, default=1)
    p.add_argument("--symmetric", action="store_true", help="symmetric (undirected) face-vectors")
    p.add_argument("--relaxed", action="store_true", help="independent permutations per axis")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("orbits", help="orbit decomposition of an incidence tensor")
    p.add_argument("--signature", "--tensor-signature", type=_signature_arg, required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("apply", help="apply a layer JSON to a tensor JSON")
    p.add_argument("--layer", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--mask", default="none", help="none, input, or a tensor JSON whose nonzeros form the mask")
    p.add_argument("--agg", choices=AGGREGATORS, default="sum")
    p.add_argument("--out-signature", type=_signature_arg, help="output tensor signature if the layer has none")
    p.add_argument("--output", help="write here instead of standard output")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("init-layer", help="write a zero, identity or seeded random layer JSON")
    p.add_argument("--in-signature", type=_signature_arg, required=True)
    p.add_argument("--out-signature", type=_signature_arg)
    p.add_argument("--in-channels", type=int, default=1)
    p.add_argument("--out-channels", type=int, default=1)
    p.add_argument("--init", choices=("zeros", "identity", "random"), default="zeros")
    p.add_argument("--seed", type=int)
    p.add_argument("--integer", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_init_layer)

    p = sub.add_parser("random-tensor", help="write a seeded random tensor JSON")
    p.add_argument("--signature", type=_signature_arg, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--integer", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_random_tensor)

    p = sub.add_parser("verify", help="brute-force self-check; exit 1 on any failure")
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--max-m", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sharing", help="parameter-sharing grid of a face-vector map")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--m-prime", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.set_defaults(func=cmd_sharing)

    p = sub.add_parser("complex", help="close facets into a simplicial complex")
    p.add_argument("--facets", required=True)
    p.add_argument("--incidence", type=_pair, help="face sizes 'm,m2' of an incidence mask")
    p.add_argument("--export", help="CSV path for the incidence mask")
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("poset", help="validate a graded poset")
    p.add_argument("--poset", required=True)
    p.add_argument("--ranks", type=_pair, help="ranks 'a,b' of an incidence mask")
    p.add_argument("--export", help="CSV path for the incidence mask")
    p.set_defaults(func=cmd_poset)

    p = sub.add_parser("algebra", help="graph operator algebra checks")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--export", nargs=2, metavar=("M,M2,I", "CSV"), help="write one operator matrix")
    p.set_defaults(func=cmd_algebra)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (IncitensorError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run(argv) -> tuple[int, str]:
    """Run the CLI in-process and capture standard output."""
    buf = io.StringIO()
    try:
        code = main(argv, buf)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
