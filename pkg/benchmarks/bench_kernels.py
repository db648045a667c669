"""Compare the compiled kernels with the pure-Python fallback.

Each workload runs on both implementations; results must agree and the
best of ``--repeat`` wall times is reported.

    python benchmarks/bench_kernels.py [--repeat 3] [--json]
"""

import argparse
import json
import sys
import time

from cspuniv.core import encode_for_search, make_instance
from cspuniv.kernels import _kernels_py as py
from cspuniv.linrelax import _reduced_rows
from cspuniv.poly import PaletteShape, _bitmap, _encode_relation, first_const_block, majority_odd
from cspuniv.templates import fooling_instance, get_template

try:
    from cspuniv.kernels import _kernels as cy
except ImportError:
    cy = None


def search_workloads():
    out = []
    for name in ("bij5_cycle", "z2arrow2_chain", "d4_main"):
        _, sizes, cons = encode_for_search(fooling_instance(name))
        out.append((f"backtrack {name}", "backtrack", (sizes, cons)))
    # colouring K_8 with 7 colours: no solution, large search tree
    k, n = 7, 8
    dom = [str(a) for a in range(k)]
    neq = [(a, b) for a in dom for b in dom if a != b]
    cons = [(f"c{i}_{j}", [f"x{i}", f"x{j}"], neq) for i in range(n) for j in range(i + 1, n)]
    _, sizes, enc = encode_for_search(make_instance({f"x{i}": dom for i in range(n)}, cons))
    out.append((f"backtrack K{n} with {k} colours", "backtrack", (sizes, enc)))
    return out


def lp_workloads():
    out = []
    for name in ("bij5_cycle", "z2arrow2_chain", "d4_main"):
        cols, rows, rhs = _reduced_rows(fooling_instance(name), 1)
        A = [[row.get(j, 0) for j in range(len(cols))] for row in rows]
        out.append((f"simplex max-support {name}", "simplex_support", (A, rhs, len(cols), True)))
    return out


def poly_workloads():
    out = []
    cases = [
        (majority_odd(5), get_template("two_sat")),
        (first_const_block(get_template("bij5").domain, PaletteShape.overlined([3, 3])), get_template("bij5")),
    ]
    for f, t in cases:
        sidx = {a: k for k, a in enumerate(t.domain)}
        n = len(t.domain)
        fstr = [n ** (f.arity - 1 - i) for i in range(f.arity)]
        for rname in sorted(t.relations):
            rel = t.relations[rname]
            if not rel:
                continue
            m = t.arity(rname)
            dtab, dstr = _bitmap(rel, sidx, n, m)
            args = (_encode_relation(rel, sidx, m), f.arity, f.table(), fstr, dtab, dstr, m)
            if len(rel) ** f.arity >= 500:
                out.append((f"poly exhaustive {f.name} / {t.name}.{rname}", "poly_exhaustive", args))
                out.append((f"poly sampled {f.name} / {t.name}.{rname}", "poly_sampled", args + (200_000, 1)))
                break
    return out


def timed(fn, args, repeat):
    best, res = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension is not built; only the fallback can run", file=sys.stderr)
        return 1
    rows = []
    for label, kernel, kargs in search_workloads() + lp_workloads() + poly_workloads():
        tc, rc = timed(getattr(cy, kernel), kargs, args.repeat)
        tp, rp = timed(getattr(py, kernel), kargs, args.repeat)
        if rc != rp:
            print(f"{label}: results differ", file=sys.stderr)
            return 2
        rows.append({"workload": label, "compiled_s": tc, "python_s": tp, "speedup": tp / tc if tc else None})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        w = max(len(r["workload"]) for r in rows)
        print(f"{'workload':<{w}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
        for r in rows:
            print(f"{r['workload']:<{w}}  {r['compiled_s']:>9.4f}s  {r['python_s']:>9.4f}s  {r['speedup']:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
