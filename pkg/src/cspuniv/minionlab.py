"""Matrix minions for the constraint-singleton algorithms and witness
extraction.

A :class:`SkeletonMatrix` is a 0/1 matrix with rows indexed by a finite
set and ``L`` columns, every column holding a 1 and every row that holds a
1 owning a column where it is the only 1.  A :class:`BlpAipPair` is the
rational/integer analogue: two matrices with unit column sums, integer
entries only where the rational one is positive, and a joint skeleton.

Minor maps act on rows: along ``pi: N -> N'`` row ``r'`` of the image is
the OR (skeleton matrices) or the sum (pairs) of the rows mapped to it.

A successful run of ``csingl(arccons)`` or ``csingl(blp>aip)`` is turned
into one matrix per variable and per constraint, one column per surviving
(constraint, tuple) pair, such that every variable matrix is the minor of
each constraint matrix along the corresponding scope projection.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

from .algorithms import reduced_instance, run
from .core import Instance, change_constraint
from .errors import PropertyViolation, UsageError
from .linrelax import LPVar, _fix_free, aip_instance, blp_instance, prune_to_support
from .propagation import arc_consistency

Row = Hashable


@dataclass(frozen=True)
class SkeletonMatrix:
    rows: tuple
    entries: tuple[tuple[int, ...], ...]

    @property
    def width(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def violations(self) -> list[str]:
        out = []
        if len(self.entries) != len(self.rows) or len(set(self.rows)) != len(self.rows):
            return ["row labels and entries disagree"]
        L = self.width
        if any(len(r) != L for r in self.entries):
            return ["ragged matrix"]
        if any(v not in (0, 1) for r in self.entries for v in r):
            out.append("entries must be 0 or 1")
        for j in range(L):
            if not any(r[j] for r in self.entries):
                out.append(f"column {j} has no 1")
        unit = _unit_columns(self.entries)
        for i, r in enumerate(self.entries):
            if any(r) and i not in unit:
                out.append(f"row {self.rows[i]!r} owns no unit column")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def row(self, label) -> tuple[int, ...]:
        return self.entries[self.rows.index(label)]

    def to_obj(self) -> dict:
        return {"rows": [_label(r) for r in self.rows], "entries": [list(r) for r in self.entries]}


@dataclass(frozen=True)
class BlpAipPair:
    rows: tuple
    blp: tuple[tuple[Fraction, ...], ...]
    aip: tuple[tuple[int, ...], ...]

    @property
    def width(self) -> int:
        return len(self.blp[0]) if self.blp else 0

    def violations(self) -> list[str]:
        n, L = len(self.rows), self.width
        if len(self.blp) != n or len(self.aip) != n or len(set(self.rows)) != n:
            return ["row labels and entries disagree"]
        if any(len(r) != L for r in self.blp) or any(len(r) != L for r in self.aip):
            return ["ragged matrix"]
        out = []
        for r in self.blp:
            if any(not (0 <= v <= 1) for v in r):
                out.append("BLP entries must lie in [0, 1]")
                break
        for j in range(L):
            if sum(r[j] for r in self.blp) != 1:
                out.append(f"BLP column {j} does not sum to 1")
            if sum(r[j] for r in self.aip) != 1:
                out.append(f"AIP column {j} does not sum to 1")
        for i in range(n):
            for j in range(L):
                if self.aip[i][j] != 0 and not self.blp[i][j] > 0:
                    out.append(f"AIP nonzero where BLP is zero at ({self.rows[i]!r}, {j})")
        units = set()
        for j in range(L):
            pos = [i for i in range(n) if self.blp[i][j] != 0 or self.aip[i][j] != 0]
            if len(pos) == 1 and self.blp[pos[0]][j] == 1 and self.aip[pos[0]][j] == 1:
                units.add(pos[0])
        for i in range(n):
            if any(v > 0 for v in self.blp[i]) and i not in units:
                out.append(f"row {self.rows[i]!r} owns no unit column")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def to_obj(self) -> dict:
        return {
            "rows": [_label(r) for r in self.rows],
            "blp": [[str(v) for v in r] for r in self.blp],
            "aip": [list(r) for r in self.aip],
        }


def _label(r):
    return list(r) if isinstance(r, tuple) else r


def _unit_columns(entries) -> set[int]:
    """Rows that are the only nonzero entry of some column."""
    out = set()
    for j in range(len(entries[0]) if entries else 0):
        nz = [i for i, r in enumerate(entries) if r[j]]
        if len(nz) == 1:
            out.add(nz[0])
    return out


# ----------------------------------------------------------------------------
# minor maps


def _check_map(rows: Sequence, pi: Mapping | Callable, target: Sequence) -> list[int]:
    f = pi if callable(pi) else pi.__getitem__
    index = {r: k for k, r in enumerate(target)}
    if len(index) != len(target):
        raise UsageError("target rows must be distinct")
    out = []
    for r in rows:
        try:
            out.append(index[f(r)])
        except KeyError:
            raise UsageError(f"row {r!r} is not mapped into the target") from None
    return out


def minor_skeleton(M: SkeletonMatrix, pi, target: Sequence) -> SkeletonMatrix:
    """Image of ``M`` along ``pi`` (a dict or callable from rows to ``target``)."""
    img = _check_map(M.rows, pi, target)
    L = M.width
    new = [[0] * L for _ in target]
    for k, r in zip(img, M.entries):
        row = new[k]
        for j, v in enumerate(r):
            if v:
                row[j] = 1
    out = SkeletonMatrix(tuple(target), tuple(map(tuple, new)))
    bad = out.violations()
    if bad:
        raise PropertyViolation(f"minor of a skeleton matrix is invalid: {bad[0]}")
    return out


def minor_pair(P: BlpAipPair, pi, target: Sequence) -> BlpAipPair:
    img = _check_map(P.rows, pi, target)
    L = P.width
    b = [[Fraction(0)] * L for _ in target]
    a = [[0] * L for _ in target]
    for k, rb, ra in zip(img, P.blp, P.aip):
        for j in range(L):
            b[k][j] += rb[j]
            a[k][j] += ra[j]
    out = BlpAipPair(tuple(target), tuple(map(tuple, b)), tuple(map(tuple, a)))
    bad = out.violations()
    if bad:
        raise PropertyViolation(f"minor of a BLP/AIP pair is invalid: {bad[0]}")
    return out


# ----------------------------------------------------------------------------
# random objects


def random_skeleton(rng: random.Random, n_rows: int = 4, extra: int = 3) -> SkeletonMatrix:
    """A valid skeleton matrix on rows ``0..n_rows-1``."""
    used = [i for i in range(n_rows) if rng.random() < 0.7] or [rng.randrange(n_rows)]
    cols = [[int(i == u) for i in range(n_rows)] for u in used]
    for _ in range(extra):
        k = rng.randint(1, len(used))
        pick = set(rng.sample(used, k))
        cols.append([int(i in pick) for i in range(n_rows)])
    rng.shuffle(cols)
    entries = tuple(tuple(col[i] for col in cols) for i in range(n_rows))
    return SkeletonMatrix(tuple(range(n_rows)), entries)


def random_pair(rng: random.Random, n_rows: int = 4, extra: int = 3) -> BlpAipPair:
    used = [i for i in range(n_rows) if rng.random() < 0.7] or [rng.randrange(n_rows)]
    cols_b: list[list[Fraction]] = []
    cols_a: list[list[int]] = []
    for u in used:
        cols_b.append([Fraction(int(i == u)) for i in range(n_rows)])
        cols_a.append([int(i == u) for i in range(n_rows)])
    for _ in range(extra):
        k = rng.randint(1, len(used))
        supp = rng.sample(used, k)
        w = [rng.randint(1, 4) for _ in supp]
        tot = sum(w)
        b = [Fraction(0)] * n_rows
        for i, wi in zip(supp, w):
            b[i] = Fraction(wi, tot)
        a = [0] * n_rows
        for i in supp[1:]:
            a[i] = rng.randint(-2, 2)
        a[supp[0]] = 1 - sum(a)
        cols_b.append(b)
        cols_a.append(a)
    order = list(range(len(cols_b)))
    rng.shuffle(order)
    blp = tuple(tuple(cols_b[j][i] for j in order) for i in range(n_rows))
    aip = tuple(tuple(cols_a[j][i] for j in order) for i in range(n_rows))
    return BlpAipPair(tuple(range(n_rows)), blp, aip)


# ----------------------------------------------------------------------------
# witnesses


@dataclass
class MinionWitness:
    kind: str  # "arccons" | "blpaip"
    columns: list  # (constraint id, tuple) per column
    variables: dict
    constraints: dict

    @property
    def width(self) -> int:
        return len(self.columns)

    def to_obj(self) -> dict:
        return {
            "result": "witness",
            "algorithm": "csingl-arccons" if self.kind == "arccons" else "csingl-blpaip",
            "width": self.width,
            "columns": [[cid, list(t)] for cid, t in self.columns],
            "variables": {x: m.to_obj() for x, m in self.variables.items()},
            "constraints": {c: m.to_obj() for c, m in self.constraints.items()},
        }


def verify_witness(inst: Instance, w: MinionWitness) -> list[str]:
    """Invariant and compatibility failures of ``w`` (empty when valid)."""
    minor = minor_skeleton if w.kind == "arccons" else minor_pair
    out = []
    for name, m in list(w.variables.items()) + list(w.constraints.items()):
        for msg in m.violations():
            out.append(f"{name}: {msg}")
    if out:
        return out
    for c in inst.constraints:
        M = w.constraints[c.id]
        for j, x in enumerate(c.scope):
            img = minor(M, lambda t, j=j: t[j], inst.domains[x])
            if img != w.variables[x]:
                out.append(f"variable {x} is not the minor of {c.id} at position {j}")
    return out


def _columns(final: Instance) -> list:
    return [(c.id, t) for c in final.sorted_constraints() for t in c.relation]


def _free(inst: Instance) -> set[str]:
    used = {x for c in inst.constraints for x in c.scope}
    return {x for x in inst.variables if x not in used}


def extract_witness_arccons(inst: Instance) -> MinionWitness | None:
    """Matrices for a Yes answer of ``csingl(arccons)``, or None on No.

    Column ``(C, a)`` records the arc-consistent reduction obtained after
    restricting ``C`` to the single tuple ``a``: a variable row is 1 when
    the value survives, a constraint row when the tuple survives.
    Variables outside every constraint get a unit row at their first value.
    """
    v = run("csingl(arccons)", inst)
    if not v:
        return None
    final = reduced_instance(v)
    cols = _columns(final)
    free = _free(inst)
    L = max(len(cols), 1)
    var_rows = {x: [[0] * L for _ in inst.domains[x]] for x in inst.variables}
    con_rows = {c.id: [[0] * L for _ in c.relation] for c in inst.constraints}
    for j, (cid, t) in enumerate(cols):
        ok, red = arc_consistency(change_constraint(final, cid, [t]))
        if not ok:
            raise PropertyViolation(f"arc consistency fails on column ({cid}, {t})")
        for x in inst.variables:
            if x in free:
                continue
            dom = set(red.domains[x])
            for k, b in enumerate(inst.domains[x]):
                var_rows[x][k][j] = int(b in dom)
        for c in inst.constraints:
            rel = set(red.constraint(c.id).relation)
            for k, u in enumerate(c.relation):
                con_rows[c.id][k][j] = int(u in rel)
    for x in free:
        var_rows[x][0] = [1] * L
    w = MinionWitness(
        "arccons",
        cols,
        {x: SkeletonMatrix(tuple(inst.domains[x]), tuple(map(tuple, var_rows[x]))) for x in inst.variables},
        {
            c.id: SkeletonMatrix(c.relation, tuple(map(tuple, con_rows[c.id])))
            for c in inst.constraints
        },
    )
    bad = verify_witness(inst, w)
    if bad:
        raise PropertyViolation(f"extracted witness is invalid: {bad[0]}")
    return w


def _blp_aip(inst: Instance):
    s = blp_instance(inst, True)
    if s is None:
        return None
    a = aip_instance(prune_to_support(inst, s), 1)
    if a is None:
        return None
    return _fix_free(inst, s), _fix_free(inst, a)


def extract_witness_blpaip(inst: Instance) -> MinionWitness | None:
    """Matrix pairs for a Yes answer of ``csingl(blp>aip)``, or None on No.

    Column ``(C, a)`` holds the BLP solution (largest support) and the AIP
    solution on its support, for the instance with ``C`` restricted to
    ``a``.
    """
    v = run("csingl(blp>aip)", inst)
    if not v:
        return None
    final = reduced_instance(v)
    cols = _columns(final)
    free = _free(inst)
    L = max(len(cols), 1)
    zero = Fraction(0)
    vb = {x: [[zero] * L for _ in inst.domains[x]] for x in inst.variables}
    va = {x: [[0] * L for _ in inst.domains[x]] for x in inst.variables}
    cb = {c.id: [[zero] * L for _ in c.relation] for c in inst.constraints}
    ca = {c.id: [[0] * L for _ in c.relation] for c in inst.constraints}
    for j, (cid, t) in enumerate(cols):
        got = _blp_aip(change_constraint(final, cid, [t]))
        if got is None:
            raise PropertyViolation(f"BLP+AIP fails on column ({cid}, {t})")
        s, a = got
        for x in inst.variables:
            if x in free:
                continue
            for k, b in enumerate(inst.domains[x]):
                key = LPVar.val(x, b)
                vb[x][k][j] = Fraction(s.get(key, 0))
                va[x][k][j] = int(a.get(key, 0))
        for c in inst.constraints:
            for k, u in enumerate(c.relation):
                key = LPVar.tup(c.id, u)
                cb[c.id][k][j] = Fraction(s.get(key, 0))
                ca[c.id][k][j] = int(a.get(key, 0))
    for x in free:
        vb[x][0] = [Fraction(1)] * L
        va[x][0] = [1] * L

    def pair(rows, b, a):
        return BlpAipPair(tuple(rows), tuple(map(tuple, b)), tuple(map(tuple, a)))

    w = MinionWitness(
        "blpaip",
        cols,
        {x: pair(inst.domains[x], vb[x], va[x]) for x in inst.variables},
        {c.id: pair(c.relation, cb[c.id], ca[c.id]) for c in inst.constraints},
    )
    bad = verify_witness(inst, w)
    if bad:
        raise PropertyViolation(f"extracted witness is invalid: {bad[0]}")
    return w


__all__ = [
    "SkeletonMatrix",
    "BlpAipPair",
    "minor_skeleton",
    "minor_pair",
    "random_skeleton",
    "random_pair",
    "MinionWitness",
    "verify_witness",
    "extract_witness_arccons",
    "extract_witness_blpaip",
]
