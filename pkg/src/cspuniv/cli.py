"""Command-line entry point.

Structured output goes to stdout as JSON, log lines to stderr.  Exit codes:
0 for Yes (or a confirmed property), 1 for No, 2 for usage and input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .algorithms import DomainRemoval, ReductionTrace, TupleRemoval, format_spec, parse_spec, run, validate_certificate
from .core import DEFAULT_ORACLE_CAP, Instance, brute_force_solve, instance_to_obj, load_instance
from .errors import CspError
from .linrelax import LPVar

log = logging.getLogger("cspuniv")

EXIT_YES, EXIT_NO, EXIT_ERROR = 0, 1, 2

# the largest built-in instance (9 variables over 8 elements) needs this
TABLE_ORACLE_CAP = 10**10


def to_jsonable(obj):
    """Recursively turn certificates into plain JSON values."""
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, LPVar):
        return obj.render()
    if isinstance(obj, dict):
        items = [(to_jsonable(k) if not isinstance(k, str) else k, to_jsonable(v)) for k, v in obj.items()]
        return {str(k): v for k, v in sorted(items, key=lambda kv: str(kv[0]))}
    if isinstance(obj, ReductionTrace):
        return {"events": [to_jsonable(e) for e in obj.events]}
    if isinstance(obj, DomainRemoval):
        return {"remove_value": [obj.var, obj.element]}
    if isinstance(obj, TupleRemoval):
        return {"remove_tuple": [obj.cid, list(obj.tuple)]}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, Instance):
        return instance_to_obj(obj)
    return obj


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def builtin_instance(name: str) -> Instance | None:
    from .templates import FOOLING, fooling_instance, horn_chain

    stem = name[:-5] if name.endswith(".json") else name
    if stem == "horn_chain":
        return horn_chain()
    if stem in FOOLING:
        return fooling_instance(stem)
    return None


def read_instance(ref: str) -> Instance:
    """A JSON file path, or the name of a built-in instance (``.json``
    suffix optional) when no such file exists."""
    p = Path(ref)
    if p.is_file():
        return load_instance(p.read_bytes())
    inst = builtin_instance(ref)
    if inst is None:
        raise CspError(f"no instance file or built-in instance named {ref!r}")
    log.info("using built-in instance %s", p.stem)
    return inst


# ----------------------------------------------------------------------------
# solve / oracle


def _oracle(inst: Instance, cap: int) -> dict:
    v = brute_force_solve(inst, cap)
    return {"algorithm": "oracle", "answer": v.answer, "certificate": v.certificate}


def _solve(spec_text: str, inst: Instance, seed: int, cap: int) -> dict:
    if spec_text == "oracle":
        return _oracle(inst, cap)
    spec = parse_spec(spec_text)
    v = run(spec, inst, random.Random(seed) if seed else None)
    out = {"algorithm": format_spec(spec), "answer": v.answer}
    if v.yes:
        valid = validate_certificate(inst, spec, v)
        if not valid:
            raise CspError(f"certificate of {format_spec(spec)} failed the re-check")
        out["certificate_valid"] = True
        out["certificate"] = to_jsonable(v.certificate)
    return out


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    out = _solve(args.algorithm, inst, args.seed, args.cap)
    emit(out)
    return EXIT_YES if out["answer"] == "Yes" else EXIT_NO


def cmd_oracle(args) -> int:
    out = _oracle(read_instance(args.instance), args.cap)
    emit(out)
    return EXIT_YES if out["answer"] == "Yes" else EXIT_NO


# ----------------------------------------------------------------------------
# table of algorithms against the built-in instances


@dataclass(frozen=True)
class Cell:
    algorithm: str
    expected: str  # "Yes" | "No"
    claim: str


# "fooled" cells expect Yes on an unsatisfiable instance, "solving" cells No
TABLE_ROWS = [
    (
        "Horn-SAT",
        "horn_chain",
        [
            Cell("aip", "Yes", "AIP does not solve Horn-SAT"),
            Cell("arccons", "No", "ArcCons solves Horn-SAT"),
        ],
    ),
    (
        "2-SAT",
        "twosat_cycle",
        [
            Cell("blp", "Yes", "BLP does not solve 2-SAT"),
            Cell("singl(aip)", "Yes", "SinglAIP does not solve 2-SAT"),
            Cell("singl(arccons)", "No", "SinglArcCons solves 2-SAT"),
            Cell("arccons>aip", "No", "ArcCons+AIP solves 2-SAT"),
        ],
    ),
    (
        "LIN(3,2)",
        "lin32_contradiction",
        [
            Cell("singl(blp)", "Yes", "SinglBLP does not solve LIN(3,p)"),
            Cell("aip", "No", "AIP solves LIN(3,p)"),
        ],
    ),
    (
        "bijections on 5 elements",
        "bij5_cycle",
        [
            Cell("blp>aip", "Yes", "BLP+AIP does not solve the bijection template"),
            Cell("singl(arccons)", "No", "SinglArcCons solves the bijection template"),
            Cell("singl(aip)", "No", "SinglAIP solves the bijection template"),
        ],
    ),
    (
        "Z2 union Z3",
        "z2z3_mixed",
        [
            Cell("aip", "Yes", "AIP answers Yes on the mixed instance"),
            Cell("singl(blp)>aip", "Yes", "SinglBLP+AIP does not solve Z2 union Z3"),
            Cell("singl(aip)", "No", "SinglAIP solves Z2 union Z3"),
        ],
    ),
    (
        "Z2 <- 2",
        "z2arrow2_chain",
        [
            Cell("singl(blp)>aip", "Yes", "SinglBLP+AIP does not solve Z2 <- 2"),
            Cell("singl(aip)", "No", "SinglAIP solves Z2 <- 2"),
        ],
    ),
    (
        "D4 with constants",
        "d4_main",
        [
            Cell("aip", "Yes", "the D4 instance fools AIP"),
            Cell("singl(aip)", "Yes", "the D4 instance fools SinglAIP"),
            Cell("singl(blp>aip)", "Yes", "Singl(BLP+AIP) does not solve D4 with constants"),
            Cell("csingl(blp>aip)", "Yes", "CSingl(BLP+AIP) does not solve D4 with constants"),
        ],
    ),
]

UNTESTED = [
    "'solves CSP(A)' statements quantify over all instances; only the listed instances are run",
    "no algorithm is named as working for D4 with constants",
    "the characterisation of the strongest singleton algorithm by minion homomorphisms",
    "the announced follow-up results that are stated without proof",
]


def table2_report(seed: int = 0, timing: bool = False) -> dict:
    rows = []
    flags = []
    for row_name, inst_name, cells in TABLE_ROWS:
        inst = builtin_instance(inst_name)
        t0 = time.perf_counter()
        oracle = brute_force_solve(inst, TABLE_ORACLE_CAP).answer
        out_cells = []
        if oracle != "No":
            flags.append(f"{inst_name}: oracle says {oracle}, the instance was meant to be unsatisfiable")
        for cell in cells:
            t1 = time.perf_counter()
            spec = parse_spec(cell.algorithm)
            v = run(spec, inst, random.Random(seed) if seed else None)
            entry = {
                "algorithm": cell.algorithm,
                "role": "fooled" if cell.expected == "Yes" else "solving",
                "claim": cell.claim,
                "expected": cell.expected,
                "observed": v.answer,
                "match": v.answer == cell.expected,
            }
            if v.yes:
                entry["certificate_valid"] = validate_certificate(inst, spec, v)
            if timing:
                entry["seconds"] = round(time.perf_counter() - t1, 3)
            if not entry["match"]:
                flags.append(f"{inst_name}: {cell.algorithm} observed {v.answer}, claim '{cell.claim}' expects {cell.expected}")
            out_cells.append(entry)
        row = {"template": row_name, "instance": inst_name, "oracle": oracle, "cells": out_cells}
        if timing:
            row["seconds"] = round(time.perf_counter() - t0, 3)
        rows.append(row)
    return {"rows": rows, "mismatches": flags, "untested": UNTESTED}


def cmd_table2(args) -> int:
    emit(table2_report(args.seed, args.timing))
    return EXIT_YES


# ----------------------------------------------------------------------------
# templates and instances


def cmd_template(args) -> int:
    from .templates import TEMPLATES, get_template

    if args.name is None:
        emit({"templates": sorted(TEMPLATES) + ["lin_<n>_<p>"]})
        return EXIT_YES
    emit(get_template(args.name).to_obj())
    return EXIT_YES


def cmd_instance(args) -> int:
    from .templates import FOOLING, get_template, random_instance

    if args.random is not None:
        inst = random_instance(get_template(args.random), random.Random(args.seed), args.vars, args.constraints)
    elif args.name is None:
        emit({"instances": sorted(FOOLING) + ["horn_chain"]})
        return EXIT_YES
    else:
        inst = builtin_instance(args.name)
        if inst is None:
            raise CspError(f"unknown instance {args.name!r}")
    emit(instance_to_obj(inst))
    return EXIT_YES


# ----------------------------------------------------------------------------
# polymorphisms, D4, minions


def cmd_poly_check(args) -> int:
    from .poly import PaletteShape, is_palette_block, is_polymorphism, parse_function, parse_shape
    from .templates import get_template

    t = get_template(args.template)
    shape = parse_shape(args.shape) if args.shape else None
    f = parse_function(args.function, shape, t.domain)
    out = {"template": t.name, "function": f.name}
    rep = is_polymorphism(f, t, samples=args.samples, seed=args.seed)
    out["polymorphism"] = rep.ok
    out["polymorphism_check"] = rep.to_obj()
    ok = rep.ok
    if args.flavor:
        if shape is None:
            shape = PaletteShape.plain([f.arity])
        prep = is_palette_block(f, shape, args.flavor, seed=args.seed)
        out["shape"] = shape.render()
        out["flavor"] = args.flavor
        out["palette_block"] = prep.ok
        out["palette_check"] = prep.to_obj()
        ok = ok and prep.ok
    emit(out)
    return EXIT_YES if ok else EXIT_NO


def verify_clone(n_random: int = 50, seed: int = 0) -> dict:
    from .d4 import D4Op, all_d4ops, check_group_presentation, d4op_is_polymorphism, random_d4op, term_round_trip

    rng = random.Random(seed)
    ops = [op for n in (1, 2) for op in all_d4ops(n)]
    ops += [random_d4op(3, rng) for _ in range(n_random)]
    return {
        "presentation": check_group_presentation(),
        "compose_preserves_relations": d4op_is_polymorphism(D4Op.compose_op()),
        "term_round_trip": all(term_round_trip(op) for op in ops),
        "ops_checked": len(ops),
    }


def cmd_d4(args) -> int:
    from .d4 import check_palette_nonexistence

    if args.action == "verify-clone":
        out = verify_clone(seed=args.seed)
        emit(out)
        return EXIT_YES if all(v for k, v in out.items() if k != "ops_checked") else EXIT_NO
    res = check_palette_nonexistence(args.n, args.l, args.abelian_control)
    emit(res.to_obj())
    return EXIT_YES if res.result == "infeasible" else EXIT_NO


def cmd_minion_witness(args) -> int:
    from .minionlab import extract_witness_arccons, extract_witness_blpaip

    inst = read_instance(args.instance)
    fn = extract_witness_arccons if args.algorithm == "csingl-arccons" else extract_witness_blpaip
    w = fn(inst)
    if w is None:
        emit({"result": "none", "algorithm": args.algorithm})
        return EXIT_NO
    emit(w.to_obj())
    return EXIT_YES


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cspuniv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="JSON file or built-in instance name")
        sp.add_argument("--seed", type=int, default=0, help="0 keeps the normative sweep order")

    sp = sub.add_parser("solve", help="run an algorithm on an instance")
    sp.add_argument("--algorithm", required=True, help='e.g. "singl(blp)>aip" or "oracle"')
    sp.add_argument("--cap", type=int, default=DEFAULT_ORACLE_CAP)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exhaustive search")
    sp.add_argument("--cap", type=int, default=TABLE_ORACLE_CAP)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("table2", help="run the algorithms against the built-in instances")
    sp.add_argument("--timing", action="store_true", help="include wall times (not byte-stable)")
    common(sp, instance=False)
    sp.set_defaults(func=cmd_table2)

    sp = sub.add_parser("template", help="print a template (or list them)")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--emit", action="store_true", help="print as JSON (the default)")
    sp.set_defaults(func=cmd_template)

    sp = sub.add_parser("instance", help="print a built-in or random instance (or list them)")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--emit", action="store_true", help="print as JSON (the default)")
    sp.add_argument("--random", metavar="TEMPLATE", help="draw a random instance over TEMPLATE")
    sp.add_argument("--vars", type=int, default=None)
    sp.add_argument("--constraints", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_instance)

    sp = sub.add_parser("poly-check", help="check a polymorphism and its block symmetry")
    sp.add_argument("--template", required=True)
    sp.add_argument("--function", required=True, help="name or name:arity")
    sp.add_argument("--shape", help='block shape, e.g. "(3,3,3)"')
    sp.add_argument("--flavor", choices=["sym", "tsym", "alt"])
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_poly_check)

    sp = sub.add_parser("d4", help="dihedral group checks")
    sp.add_argument("action", choices=["verify-clone", "nonexistence"])
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--l", type=int, default=4)
    sp.add_argument("--abelian-control", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_d4)

    sp = sub.add_parser("minion-witness", help="matrix witness for a constraint-singleton run")
    sp.add_argument("--algorithm", required=True, choices=["csingl-arccons", "csingl-blpaip"])
    common(sp)
    sp.set_defaults(func=cmd_minion_witness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_YES
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CspError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
