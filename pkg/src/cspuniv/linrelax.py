"""The linear relaxation of an instance and its exact solvers.

The relaxation has a weight ``C^a`` for every tuple ``a`` of every constraint
``C`` and a weight ``x^b`` for every variable ``x`` and value ``b``.  Each
constraint's weights sum to ``d`` (1 for the plain relaxation) and the
weights of the tuples with ``b`` at position ``i`` sum to ``x_i^b``.

Feasibility over ``Q ∩ [0, 1]`` (BLP) goes through an exact fraction-free
simplex; feasibility over ``Z`` (AIP) through integer row reduction.  No
floating point is involved anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import lcm
from typing import Iterable, NamedTuple, Sequence

from . import kernels
from .core import Instance
from .propagation import arc_consistency


class LPVar(NamedTuple):
    """``kind`` is ``"C"`` (constraint tuple) or ``"X"`` (variable value)."""

    kind: str
    owner: str
    value: object

    @staticmethod
    def tup(cid: str, t: Sequence[str]) -> "LPVar":
        return LPVar("C", cid, tuple(t))

    @staticmethod
    def val(var: str, b: str) -> "LPVar":
        return LPVar("X", var, b)

    def render(self) -> str:
        if self.kind == "C":
            return f"C:{self.owner}:{','.join(self.value)}"
        return f"X:{self.owner}:{self.value}"


class RationalSolution(dict):
    """Map from :class:`LPVar` to :class:`fractions.Fraction`."""

    def support(self) -> frozenset:
        return frozenset(v for v, q in self.items() if q != 0)

    def denominator_lcm(self) -> int:
        return lcm(1, *(q.denominator for q in self.values()))


class IntegerSolution(dict):
    """Map from :class:`LPVar` to ``int`` (negative values allowed)."""

    def support(self) -> frozenset:
        return frozenset(v for v, q in self.items() if q != 0)


@dataclass
class LinearSystem:
    vars: list
    equations: list  # (dict LPVar -> int, rhs)
    d: int = 1
    source: Instance | None = field(default=None, compare=False, repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "vars": [v.render() for v in self.vars],
                "equations": [
                    {"coeffs": {v.render(): c for v, c in coeffs.items()}, "rhs": rhs}
                    for coeffs, rhs in self.equations
                ],
            },
            indent=1,
        )

    def satisfied_by(self, sol: dict) -> bool:
        """Exact substitution check (missing variables count as 0)."""
        for coeffs, rhs in self.equations:
            if sum(c * sol.get(v, 0) for v, c in coeffs.items()) != rhs:
                return False
        return True


def build_relaxation(inst: Instance, d: int = 1) -> LinearSystem:
    """Write out the relaxation with sum right-hand sides equal to ``d``."""
    if d < 1:
        raise ValueError("d must be positive")
    vars_: list[LPVar] = []
    eqs = []
    for c in inst.constraints:
        vars_.extend(LPVar.tup(c.id, t) for t in c.relation)
    for v in inst.variables:
        vars_.extend(LPVar.val(v, b) for b in inst.domains[v])
    for c in inst.constraints:
        eqs.append(({LPVar.tup(c.id, t): 1 for t in c.relation}, d))
    for c in inst.constraints:
        for i, x in enumerate(c.scope):
            for b in inst.domains[x]:
                coeffs = {LPVar.tup(c.id, t): 1 for t in c.relation if t[i] == b}
                coeffs[LPVar.val(x, b)] = -1
                eqs.append((coeffs, 0))
    return LinearSystem(vars_, eqs, d, inst)


# ----------------------------------------------------------------------------
# presolved form: only tuple weights, one reference occurrence per variable


def _occurrences(inst: Instance):
    occ: dict[str, list[tuple[int, int]]] = {v: [] for v in inst.variables}
    for k, c in enumerate(inst.constraints):
        for i, x in enumerate(c.scope):
            occ[x].append((k, i))
    return occ


def _reduced_rows(inst: Instance, d: int):
    """Rows over tuple weights only.

    Each variable keeps its first occurrence as the reference; every other
    occurrence gets ``marginal == reference marginal`` for all values but
    the last (which follows from the sum rows).  Returns
    ``(cols, rows, rhs)`` with ``cols[j] = (constraint index, tuple)`` and
    rows as sparse dicts.
    """
    cols = []
    start = []
    for k, c in enumerate(inst.constraints):
        start.append(len(cols))
        cols.extend((k, t) for t in c.relation)
    rows: list[dict[int, int]] = []
    rhs: list[int] = []
    for k, c in enumerate(inst.constraints):
        rows.append({start[k] + j: 1 for j in range(len(c.relation))})
        rhs.append(d)
    occ = _occurrences(inst)
    for x in inst.variables:
        places = occ[x]
        if len(places) < 2:
            continue
        vals = inst.domains[x][:-1]
        k0, i0 = places[0]
        rel0 = inst.constraints[k0].relation
        for k, i in places[1:]:
            rel = inst.constraints[k].relation
            for b in vals:
                row: dict[int, int] = {}
                for j, t in enumerate(rel):
                    if t[i] == b:
                        row[start[k] + j] = 1
                for j, t in enumerate(rel0):
                    if t[i0] == b:
                        col = start[k0] + j
                        row[col] = row.get(col, 0) - 1
                row = {j: a for j, a in row.items() if a}
                if row:
                    rows.append(row)
                    rhs.append(0)
    return cols, rows, rhs


def _complete(inst: Instance, weights: dict, zero, fill_free) -> dict:
    """Extend tuple weights to a full solution (variable weights = marginals)."""
    sol = {}
    for c in inst.constraints:
        for t in c.relation:
            sol[LPVar.tup(c.id, t)] = weights.get((c.id, t), zero)
    occ = _occurrences(inst)
    for x in inst.variables:
        dom = inst.domains[x]
        if occ[x]:
            k, i = occ[x][0]
            c = inst.constraints[k]
            marg = {b: zero for b in dom}
            for t in c.relation:
                marg[t[i]] += sol[LPVar.tup(c.id, t)]
            for b in dom:
                sol[LPVar.val(x, b)] = marg[b]
        else:
            for b in dom:
                sol[LPVar.val(x, b)] = fill_free(len(dom))
    return sol


def _uniform_weights(inst: Instance):
    """Uniform weights per relation, if they form a solution."""
    occ = _occurrences(inst)
    for x in inst.variables:
        places = occ[x]
        if len(places) < 2:
            continue
        ref = None
        for k, i in places:
            rel = inst.constraints[k].relation
            counts: dict[str, int] = {}
            for t in rel:
                counts[t[i]] = counts.get(t[i], 0) + 1
            n = len(rel)
            marg = {b: Fraction(cnt, n) for b, cnt in counts.items()}
            if ref is None:
                ref = marg
            elif marg != ref:
                return None
    w = {}
    for c in inst.constraints:
        q = Fraction(1, len(c.relation))
        for t in c.relation:
            w[(c.id, t)] = q
    return w


# ----------------------------------------------------------------------------
# BLP


def _blp_weights(inst: Instance, want_max: bool):
    """Tuple weights of a BLP solution of ``inst`` (or None).

    Tuples outside the greatest arc-consistent family get weight zero in
    every BLP solution (the positive part of any solution is itself
    arc-consistent), so they are dropped before the LP.  When the uniform
    distribution on the surviving tuples is a solution it already has the
    largest possible support.
    """
    if any(not c.relation for c in inst.constraints):
        return None
    ok, red = arc_consistency(inst)
    if not ok:
        return None
    uni = _uniform_weights(red)
    if uni is not None:
        return uni
    cols, rows, rhs = _reduced_rows(red, 1)
    n = len(cols)
    A = []
    for row in rows:
        dense = [0] * n
        for j, a in row.items():
            dense[j] = a
        A.append(dense)
    sols = kernels.simplex_support(A, rhs, n, want_max)
    if sols is None:
        return None
    k = len(sols)
    w = {}
    for j, (k_c, t) in enumerate(cols):
        q = sum((Fraction(nums[j], den) for nums, den in sols), Fraction(0)) / k
        if q:
            w[(red.constraints[k_c].id, t)] = q
    return w


@lru_cache(maxsize=4096)
def blp_instance(inst: Instance, want_max: bool = False) -> RationalSolution | None:
    """BLP solution of the relaxation of ``inst`` (maximal support on request)."""
    w = _blp_weights(inst, want_max)
    if w is None:
        return None
    return RationalSolution(
        _complete(inst, w, Fraction(0), lambda n: Fraction(1, n))
    )


def _generic_lp(sys: LinearSystem, want_max: bool) -> RationalSolution | None:
    index = {v: j for j, v in enumerate(sys.vars)}
    n = len(sys.vars)
    A: list[list[int]] = []
    b: list[int] = []
    for coeffs, rhs in sys.equations:
        row = [0] * n
        for v, a in coeffs.items():
            row[index[v]] += a
        if not any(row):
            if rhs != 0:
                return None
            continue
        A.append(row)
        b.append(rhs)
    # a variable is already bounded by 1 when it sits in a row with
    # nonnegative coefficients, coefficient >= 1 on it, and rhs 1
    bounded = [False] * n
    for row, rhs in zip(A, b):
        if rhs == 1 and all(a >= 0 for a in row):
            for j, a in enumerate(row):
                if a >= 1:
                    bounded[j] = True
    extra = [j for j in range(n) if not bounded[j]]
    width = n + len(extra)
    A = [row + [0] * len(extra) for row in A]
    for s, j in enumerate(extra):
        row = [0] * width
        row[j] = 1
        row[n + s] = 1
        A.append(row)
        b.append(1)
    sols = kernels.simplex_support(A, b, width, want_max)
    if sols is None:
        return None
    k = len(sols)
    out = RationalSolution()
    for j, v in enumerate(sys.vars):
        out[v] = sum((Fraction(nums[j], den) for nums, den in sols), Fraction(0)) / k
    return out


def _is_plain_relaxation(sys: LinearSystem) -> bool:
    return sys.source is not None and sys.d == 1


def lp_feasible_01(sys: LinearSystem) -> RationalSolution | None:
    """Exact feasibility of ``sys`` over ``Q ∩ [0, 1]``."""
    if _is_plain_relaxation(sys):
        return blp_instance(sys.source, False)
    return _generic_lp(sys, False)


def lp_max_support(sys: LinearSystem):
    """A feasible solution whose support is the union of all feasible supports.

    Returns ``(solution, support)`` or ``None`` when infeasible.  The solution
    is the average of basic solutions found by repeatedly maximising the
    total weight outside the support collected so far.
    """
    sol = blp_instance(sys.source, True) if _is_plain_relaxation(sys) else _generic_lp(sys, True)
    if sol is None:
        return None
    return sol, sol.support()


# ----------------------------------------------------------------------------
# AIP


def solve_integer_system(rows: list[dict[int, int]], rhs: list[int], n: int) -> list[int] | None:
    """Integer solution of a sparse system ``A x = b`` (or None).

    Unit coefficients are eliminated first; each such step is unimodular, so
    integer solutions correspond one to one.  Whatever is left is handled by
    column-style Hermite reduction with extended gcd steps.
    """
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    alive = set(range(len(rows)))
    col_rows: dict[int, set[int]] = {}
    for i, r in enumerate(rows):
        for j in r:
            col_rows.setdefault(j, set()).add(i)
    for i in list(alive):
        if not rows[i]:
            if rhs[i] != 0:
                return None
            alive.discard(i)
    steps = []  # (col, sign, row, rhs) meaning x_col = sign * (rhs - sum row[j] x_j)
    while True:
        best = None
        for i in alive:
            r = rows[i]
            if best is not None and len(r) >= best[0]:
                continue
            for j, a in r.items():
                if a == 1 or a == -1:
                    best = (len(r), i, j)
                    break
        if best is None:
            break
        _, p, c = best
        prow = rows[p]
        s = prow[c]
        pr = rhs[p]
        alive.discard(p)
        for j in prow:
            col_rows[j].discard(p)
        for i in list(col_rows.get(c, ())):
            r = rows[i]
            f = r[c] * s  # subtract f * prow
            for j, a in prow.items():
                v = r.get(j, 0) - f * a
                if v:
                    if j not in r:
                        col_rows[j].add(i)
                    r[j] = v
                elif j in r:
                    del r[j]
                    col_rows[j].discard(i)
            rhs[i] -= f * pr
            if not r:
                if rhs[i] != 0:
                    return None
                alive.discard(i)
        rest = {j: a for j, a in prow.items() if j != c}
        steps.append((c, s, rest, pr))
    x = [0] * n
    if alive:
        sub = _hermite_solve([rows[i] for i in sorted(alive)], [rhs[i] for i in sorted(alive)])
        if sub is None:
            return None
        for j, v in sub.items():
            x[j] = v
    for c, s, rest, pr in reversed(steps):
        x[c] = s * (pr - sum(a * x[j] for j, a in rest.items()))
    return x


def _hermite_solve(rows: list[dict[int, int]], rhs: list[int]) -> dict[int, int] | None:
    cols = sorted({j for r in rows for j in r})
    k = len(cols)
    M = [[r.get(j, 0) for j in cols] for r in rows]
    U = [[int(a == b) for b in range(k)] for a in range(k)]  # columns of U track x = U y

    def colop(p, q, a, b, c, d):
        # (col_p, col_q) <- (a col_p + b col_q, c col_p + d col_q), det = +-1
        for mat in (M, U):
            for row in mat:
                u, v = row[p], row[q]
                row[p] = a * u + b * v
                row[q] = c * u + d * v

    y = [0] * k
    piv = 0
    for i in range(len(M)):
        row = M[i]
        for q in range(piv + 1, k):
            if row[q] == 0:
                continue
            u, v = row[piv], row[q]
            g, s, t = _xgcd(u, v)
            colop(piv, q, s, t, -v // g, u // g)
        acc = rhs[i] - sum(row[q] * y[q] for q in range(piv))
        if piv < k and row[piv] != 0:
            if acc % row[piv]:
                return None
            y[piv] = acc // row[piv]
            piv += 1
        elif acc != 0:
            return None
    x = {}
    for r, j in enumerate(cols):
        x[j] = sum(U[r][q] * y[q] for q in range(k))
    return x


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b = g = gcd(a, b) > 0``."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@lru_cache(maxsize=4096)
def aip_instance(inst: Instance, d: int = 1) -> IntegerSolution | None:
    """Integer solution of the relaxation of ``inst`` with sums ``d``."""
    if any(not c.relation for c in inst.constraints):
        return None
    cols, rows, rhs = _reduced_rows(inst, d)
    x = solve_integer_system(rows, rhs, len(cols))
    if x is None:
        return None
    w = {(inst.constraints[k].id, t): x[j] for j, (k, t) in enumerate(cols)}
    return IntegerSolution(_complete(inst, w, 0, lambda n: 0))


def _generic_int(sys: LinearSystem) -> IntegerSolution | None:
    index = {v: j for j, v in enumerate(sys.vars)}
    rows = []
    rhs = []
    for coeffs, r in sys.equations:
        row: dict[int, int] = {}
        for v, a in coeffs.items():
            row[index[v]] = row.get(index[v], 0) + a
        rows.append({j: a for j, a in row.items() if a})
        rhs.append(r)
    x = solve_integer_system(rows, rhs, len(sys.vars))
    if x is None:
        return None
    return IntegerSolution(zip(sys.vars, x))


def int_feasible(sys: LinearSystem) -> IntegerSolution | None:
    """Decide whether ``sys`` has a solution over ``Z``; return a witness."""
    if sys.source is not None:
        return aip_instance(sys.source, sys.d)
    return _generic_int(sys)


# ----------------------------------------------------------------------------
# d-solutions


def is_d_solution(inst: Instance, sol: dict, d: int) -> bool:
    if any(not isinstance(v, int) or v < 0 for v in sol.values()):
        return False
    return build_relaxation(inst, d).satisfied_by(sol)


def scale(sol: dict, k) -> dict:
    return {v: q * k for v, q in sol.items()}


def add(s1: dict, s2: dict) -> dict:
    keys = set(s1) | set(s2)
    return {v: s1.get(v, 0) + s2.get(v, 0) for v in keys}


def _as_int(sol: dict) -> IntegerSolution:
    out = IntegerSolution()
    for v, q in sol.items():
        q = Fraction(q)
        if q.denominator != 1:
            raise ValueError("not integral")
        out[v] = int(q)
    return out


def _candidate_rationals(inst: Instance) -> list[RationalSolution]:
    cands = []
    uni = _uniform_weights(inst) if all(c.relation for c in inst.constraints) else None
    if uni is not None:
        cands.append(RationalSolution(_complete(inst, uni, Fraction(0), lambda n: Fraction(1, n))))
    for want_max in (False, True):
        s = blp_instance(inst, want_max)
        if s is not None and s not in cands:
            cands.append(s)
    return cands


def combination_certificate(inst: Instance):
    """The pair behind the ``Q * s_BLP + s_AIP`` construction.

    Takes a maximal-support BLP solution, scales it to an integral
    ``L``-solution, finds an AIP solution of the instance pruned to that
    support, and picks the least multiple ``Q`` of ``L`` for which
    ``Q * s_BLP + s_AIP`` is nonnegative.  Returns ``(Q, base, aip)`` where
    ``base = Q * s_BLP`` is a ``Q``-solution and ``base + aip`` a
    ``(Q + 1)``-solution, or ``None`` when either step fails.
    """
    s = blp_instance(inst, True)
    if s is None:
        return None
    pruned = prune_to_support(inst, s)
    a = aip_instance(pruned, 1)
    if a is None:
        return None
    L = s.denominator_lcm()
    m = 1
    for v, q in s.items():
        av = a.get(v, 0)
        if q == 0:
            if av != 0:
                return None
            continue
        if av < 0:
            # need m * L * q >= -av
            need = -av / (L * q)
            m = max(m, -(-need.numerator // need.denominator))
    Q = m * L
    base = _as_int(scale(s, Q))
    full_aip = IntegerSolution({v: a.get(v, 0) for v in base})
    return Q, base, full_aip


def prune_to_support(inst: Instance, sol: dict) -> Instance:
    """Drop every constraint tuple whose weight in ``sol`` is zero."""
    from .core import _raw_constraint

    cons = []
    for c in inst.constraints:
        rel = tuple(t for t in c.relation if sol.get(LPVar.tup(c.id, t), 0) != 0)
        cons.append(c if len(rel) == len(c.relation) else _raw_constraint(c.id, c.scope, rel))
    return inst.replace(None, cons)


def find_d_solution(inst: Instance, d: int) -> IntegerSolution | None:
    """Nonnegative integer solution of the relaxation with sums ``d``.

    Scaling strategy only: a rational solution whose denominators divide
    ``d`` is scaled by ``d``; otherwise ``d`` is written as
    ``a * Q + b * (Q + 1)`` with ``a, b >= 0`` and the two solutions of
    :func:`combination_certificate` are combined.  The search is not
    complete, so ``None`` does not prove that no ``d``-solution exists.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if any(not c.relation for c in inst.constraints):
        return None
    if any(not inst.domains[v] for v in inst.variables):
        return None
    for s in _candidate_rationals(inst):
        # variables outside every constraint are unconstrained; pin them
        s = _fix_free(inst, s)
        if d % lcm_of_denominators(s) == 0:
            out = _as_int(scale(s, d))
            if is_d_solution(inst, out, d):
                return out
    comb = combination_certificate(inst)
    if comb is None:
        return None
    Q, base, aip = comb
    for b in range(0, d // (Q + 1) + 1):
        rest = d - b * (Q + 1)
        if rest % Q == 0:
            a = rest // Q
            out = add(scale(base, a + b), scale(aip, b))
            out = IntegerSolution(_fix_free_int(inst, out, d))
            if is_d_solution(inst, out, d):
                return out
    return None


def _free_vars(inst: Instance) -> set[str]:
    used = {x for c in inst.constraints for x in c.scope}
    return {v for v in inst.variables if v not in used}


def _fix_free(inst: Instance, s: dict) -> dict:
    free = _free_vars(inst)
    if not free:
        return s
    out = dict(s)
    for v in free:
        dom = inst.domains[v]
        for k, b in enumerate(dom):
            out[LPVar.val(v, b)] = Fraction(int(k == 0))
    return out


def _fix_free_int(inst: Instance, s: dict, d: int) -> dict:
    free = _free_vars(inst)
    out = dict(s)
    for v in free:
        for k, b in enumerate(inst.domains[v]):
            out[LPVar.val(v, b)] = d if k == 0 else 0
    return out


# ----------------------------------------------------------------------------
# parallelogram closure


def parallelogram_closure(R: Iterable[Sequence], arity: int) -> set[tuple]:
    """Least superset of ``R`` closed under the parallelogram rule.

    For ``I`` a set of coordinates and ``a, b, c`` in the relation with
    ``a|I = b|I`` and ``a|~I = c|~I``, the tuple taking ``c`` on ``I`` and
    ``b`` off ``I`` is added.
    """
    rel = {tuple(t) for t in R}
    for t in rel:
        if len(t) != arity:
            raise ValueError(f"tuple {t!r} has arity {len(t)}, expected {arity}")
    masks = []
    for size in range(1, arity):
        for I in combinations(range(arity), size):
            masks.append([i in I for i in range(arity)])
    changed = True
    while changed:
        changed = False
        cur = list(rel)
        for b in cur:
            for c in cur:
                if b == c:
                    continue
                for mask in masks:
                    d = tuple(c[i] if mask[i] else b[i] for i in range(arity))
                    if d in rel:
                        continue
                    a = tuple(b[i] if mask[i] else c[i] for i in range(arity))
                    if a in rel:
                        rel.add(d)
                        changed = True
    return rel


def lcm_of_denominators(sol: dict) -> int:
    return lcm(1, *(Fraction(q).denominator for q in sol.values()))


__all__ = [
    "LPVar",
    "LinearSystem",
    "RationalSolution",
    "IntegerSolution",
    "build_relaxation",
    "lp_feasible_01",
    "lp_max_support",
    "int_feasible",
    "find_d_solution",
    "parallelogram_closure",
    "blp_instance",
    "aip_instance",
    "combination_certificate",
    "prune_to_support",
    "is_d_solution",
    "solve_integer_system",
]
