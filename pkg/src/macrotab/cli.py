"""Command line front-end: ``macrotab <command> [options]``.

Exit codes: 0 success, 2 usage or unknown element, 3 numerical failure.
"""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from macrotab import complex as cx
from macrotab import elements as els
from macrotab import meshfem as mf
from macrotab.exceptions import MacrotabError
from macrotab.polyset import lattice
from macrotab.quadrature import macro_rule
from macrotab.transform import geometry, plan_for

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
VARIANTS = ("alfeld", "iso", "iso3", "ps6", "ps12", "none", "reduced")


class UsageError(Exception):
    pass


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _element(args):
    if not args.name:
        raise UsageError("--name is required")
    try:
        return els.get_element(args.name, args.degree, args.variant)
    except KeyError as err:
        raise UsageError(str(err.args[0])) from None
    except (ValueError, TypeError) as err:
        raise UsageError(str(err)) from None


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v):
    return f"{v:.16e}"


def _seed(args):
    env = os.environ.get("MACROTAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MACROTAB_SEED must be an integer, got {env!r}") from None
    return args.seed


def _levels(args, default):
    if not args.levels:
        return default
    try:
        levels = tuple(int(s) for s in args.levels.split(","))
    except ValueError:
        raise UsageError(f"bad --levels {args.levels!r}") from None
    if any(n < 1 for n in levels):
        raise UsageError("mesh sizes must be positive")
    return levels


def _parse_floats(text, n, what):
    try:
        vals = [float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"bad {what} {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{what} needs {n} numbers")
    return vals


# -- commands ----------------------------------------------------------------

def cmd_element(args):
    el = _element(args)
    report = {
        "name": el.name,
        "degree": el.degree,
        "value_shape": el.value_shape,
        "dim": el.dim,
        "num_subcells": el.num_subcells,
        "condition": float(el.cond),
        "entity_dofs": {str(d): {str(e): list(map(int, ids)) for e, ids in ents.items()}
                        for d, ents in el.dual.entity_dofs.items()},
        "nodes": [{"label": n.label, "entity": list(n.entity) if n.entity else None,
                   "kind": n.meta.get("kind")} for n in el.nodes],
    }
    return json.dumps(report, indent=1)


def _points(text):
    kind, _, arg = text.partition(":")
    if kind != "lattice" or not arg.isdigit() or int(arg) < 1:
        raise UsageError(f"bad --points {text!r} (expected lattice:n)")
    return lattice(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), int(arg))


def cmd_tabulate(args):
    el = _element(args)
    pts = _points(args.points)
    tab = el.tabulate(pts, args.deriv)
    header = ["x", "y", "dx", "dy", "comp"] + [f"phi{j}" for j in range(el.dim)]
    rows = []
    for alpha in sorted(tab, key=lambda a: (sum(a), tuple(-x for x in a))):
        vals = tab[alpha]
        for q, x in enumerate(pts):
            for c in range(vals.shape[2]):
                rows.append([_fmt(x[0]), _fmt(x[1]), alpha[0], alpha[1], c]
                            + [_fmt(v) for v in vals[:, q, c]])
    return _csv(header, rows)


def cmd_transform(args):
    el = _element(args)
    if not args.cell:
        raise UsageError("--cell x0,y0,x1,y1,x2,y2 is required")
    P = np.array(_parse_floats(args.cell, 6, "--cell")).reshape(3, 2)
    M = plan_for(el).build(geometry(P))
    if M is None:
        return json.dumps({"name": el.name, "mapping": el.mapping_kind, "M": None,
                           "note": "element is rebuilt on the physical cell"}, indent=1)
    Ms = M.tocoo() if hasattr(M, "tocoo") else None
    dense = M.toarray() if Ms is not None else np.asarray(M)
    if Ms is None:
        r, c = np.nonzero(dense)
        triplets = [[int(i), int(j), float(dense[i, j])] for i, j in zip(r, c)]
    else:
        triplets = [[int(i), int(j), float(v)] for i, j, v in zip(Ms.row, Ms.col, Ms.data) if v != 0]
    return json.dumps({"name": el.name, "mapping": el.mapping_kind, "shape": list(dense.shape),
                       "M": dense.tolist(), "triplets": triplets}, indent=1)


def _split(args):
    name = args.split or args.variant or "alfeld"
    try:
        return cx.split(cx.reference_simplex(2), name)
    except ValueError as err:
        raise UsageError(str(err)) from None


def cmd_dump_rule(args):
    degree = args.degree if args.degree is not None else 2
    if degree < 0:
        raise UsageError("--degree must be >= 0")
    rule = macro_rule(_split(args), degree)
    rows = [[_fmt(x), _fmt(y), _fmt(w)] for (x, y), w in zip(rule.points, rule.weights)]
    return _csv(["x", "y", "weight"], rows)


def cmd_dump_complex(args):
    return _split(args).to_json()


def cmd_cost(args):
    header = ["element", "degree", "N_dof", "subcells", "N_q_ref", "N_q", "C"]
    return _csv(header, [[r[h] for h in header] for r in els.cost_table()])


def cmd_convergence(args):
    study = args.study
    seed = _seed(args)
    if study == "biharmonic":
        el = _element(args)
        if el.mapping_kind not in (els.HCT_TYPE, els.HERMITE_TYPE):
            raise UsageError(f"element {el.name!r} is not C1 conforming")
        rows = mf.biharmonic_study(el, _levels(args, (2, 4, 8, 16)), seed=seed, qdeg=args.quad_degree)
        cols = mf.BIHARMONIC_COLUMNS
        rate_cols = cols[2:]
    elif study == "stokes_sv":
        if args.name and args.name.lower() not in ("sv", "scott-vogelius"):
            raise UsageError(f"element {args.name!r} is not supported by the stokes_sv study")
        rows = mf.stokes_study(_levels(args, (2, 4, 8)), seed=seed)
        cols = mf.STOKES_COLUMNS
        rate_cols = ("velocityL2", "pressureL2")
    else:
        raise UsageError(f"unknown study {study!r}")
    rates = mf.study_rates(rows, rate_cols) if len(rows) > 1 else None
    return mf.rows_to_csv(rows, cols, rates)


def cmd_sparsity(args):
    args.name = args.name or "hct3"
    el = _element(args)
    if el.mapping_kind not in (els.HCT_TYPE, els.HERMITE_TYPE):
        raise UsageError(f"element {el.name!r} is not C1 conforming")
    N = _levels(args, (8,))[-1]
    return mf.sparsity_json(args.name, N)


COMMANDS = {
    "element": cmd_element,
    "tabulate": cmd_tabulate,
    "transform": cmd_transform,
    "dump-rule": cmd_dump_rule,
    "dump-complex": cmd_dump_complex,
    "cost": cmd_cost,
    "convergence": cmd_convergence,
    "sparsity": cmd_sparsity,
}


def parser():
    p = argparse.ArgumentParser(prog="macrotab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--name")
        s.add_argument("--degree", type=int)
        s.add_argument("--variant", choices=VARIANTS)
        s.add_argument("--levels", help="comma separated mesh sizes, e.g. 2,4,8")
        s.add_argument("--seed", type=int, default=mf.DEFAULT_SEED)
        s.add_argument("--quad-degree", type=int)
        s.add_argument("--out")
        if name == "element":
            s.add_argument("--dump", action="store_true", help="print the JSON report (default)")
        if name == "tabulate":
            s.add_argument("--points", default="lattice:2")
            s.add_argument("--deriv", type=int, default=0)
        if name == "transform":
            s.add_argument("--cell")
        if name in ("dump-rule", "dump-complex"):
            s.add_argument("--split")
        if name == "cost":
            s.add_argument("--table", action="store_true")
        if name == "convergence":
            s.add_argument("--study", choices=("biharmonic", "stokes_sv"), default="biharmonic")
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
    except UsageError as err:
        print(f"macrotab: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (MacrotabError, np.linalg.LinAlgError) as err:
        print(f"macrotab: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
